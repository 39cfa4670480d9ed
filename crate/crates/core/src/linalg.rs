//! Dense small-matrix primitives.
//!
//! Everything here is sized for state dimensions in the single digits, so the
//! matrices are plain row-major `Vec<f64>` buffers and the products are naive
//! triple loops.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense real matrix stored in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, columns.len());
        for i in 0..self.rows {
            for (k, &j) in columns.iter().enumerate() {
                out[(i, k)] = self[(i, j)];
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * other`
    pub fn add_scaled(&self, other: &Matrix, s: f64) -> Matrix {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut x = rhs.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| lu[(a, col)].abs().total_cmp(&lu[(b, col)].abs()))
                .unwrap_or(col);
            if lu[(pivot, col)] == 0.0 {
                return Err(Error::Singular("solve"));
            }
            if pivot != col {
                lu.swap_rows(pivot, col);
                x.swap_rows(pivot, col);
            }
            let p = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / p;
                if factor == 0.0 {
                    continue;
                }
                for c in col..n {
                    lu[(r, c)] -= factor * lu[(col, c)];
                }
                for c in 0..x.cols {
                    x[(r, c)] -= factor * x[(col, c)];
                }
            }
        }
        for col in (0..n).rev() {
            for c in 0..x.cols {
                let mut acc = x[(col, c)];
                for k in col + 1..n {
                    acc -= lu[(col, k)] * x[(k, c)];
                }
                x[(col, c)] = acc / lu[(col, col)];
            }
        }
        Ok(x)
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut lu = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| lu[(a, col)].abs().total_cmp(&lu[(b, col)].abs()))
                .unwrap_or(col);
            if lu[(pivot, col)] == 0.0 {
                return Ok(0.0);
            }
            if pivot != col {
                lu.swap_rows(pivot, col);
                det = -det;
            }
            let p = lu[(col, col)];
            det *= p;
            for r in col + 1..n {
                let factor = lu[(r, col)] / p;
                for c in col..n {
                    lu[(r, c)] -= factor * lu[(col, c)];
                }
            }
        }
        Ok(det)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Padé coefficients b_0..b_m for the orders used by scaling and squaring.
const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm bounds below which Padé order m is accurate to unit roundoff.
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539_398_330_063_23e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential `e^{A t}` by scaling and squaring with diagonal Padé
/// approximants (orders 3, 5, 7, 9, 13 picked by the 1-norm of `A t`).
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::NonFinite("mat_exp time"));
    }
    let at = a.scale(t);
    if !at.is_finite() {
        return Err(Error::NonFinite("mat_exp argument"));
    }
    let n = at.rows;
    let norm = at.norm1();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }

    let result = if norm <= THETA3 {
        pade_low(&at, &PADE3)?
    } else if norm <= THETA5 {
        pade_low(&at, &PADE5)?
    } else if norm <= THETA7 {
        pade_low(&at, &PADE7)?
    } else if norm <= THETA9 {
        pade_low(&at, &PADE9)?
    } else {
        let s = if norm > THETA13 {
            (norm / THETA13).log2().ceil() as i32
        } else {
            0
        };
        let scaled = at.scale(2f64.powi(-s));
        let mut r = pade13(&scaled)?;
        for _ in 0..s {
            r = r.matmul(&r);
        }
        r
    };
    if !result.is_finite() {
        return Err(Error::NonFinite("mat_exp result"));
    }
    Ok(result)
}

fn pade_low(a: &Matrix, b: &[f64]) -> Result<Matrix> {
    let n = a.rows;
    let eye = Matrix::identity(n);
    let a2 = a.matmul(a);
    // even powers I, A^2, A^4, ...
    let mut powers = vec![eye.clone(), a2.clone()];
    while powers.len() < b.len().div_ceil(2) {
        let next = powers.last().expect("nonempty").matmul(&a2);
        powers.push(next);
    }
    let mut u = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 < b.len() {
            u = u.add_scaled(p, b[2 * k + 1]);
        }
        v = v.add_scaled(p, b[2 * k]);
    }
    let u = a.matmul(&u);
    finish_pade(&u, &v)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let b = &PADE13;
    let n = a.rows;
    let eye = Matrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    let w1 = a6.scale(b[13]).add_scaled(&a4, b[11]).add_scaled(&a2, b[9]);
    let w2 = a6
        .matmul(&w1)
        .add_scaled(&a6, b[7])
        .add_scaled(&a4, b[5])
        .add_scaled(&a2, b[3])
        .add_scaled(&eye, b[1]);
    let u = a.matmul(&w2);

    let z1 = a6.scale(b[12]).add_scaled(&a4, b[10]).add_scaled(&a2, b[8]);
    let v = a6
        .matmul(&z1)
        .add_scaled(&a6, b[6])
        .add_scaled(&a4, b[4])
        .add_scaled(&a2, b[2])
        .add_scaled(&eye, b[0]);
    finish_pade(&u, &v)
}

// r = (V - U)^{-1} (V + U)
fn finish_pade(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    let p = v.add_scaled(u, 1.0);
    let q = v.add_scaled(u, -1.0);
    q.solve(&p)
}

/// Uniform grid of `cells + 1` nodes on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub start: f64,
    pub end: f64,
    pub cells: usize,
}

impl UniformGrid {
    pub fn new(start: f64, end: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::DimensionMismatch("grid needs at least one cell".into()));
        }
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(Error::InvalidSystem(format!(
                "grid interval [{start}, {end}] is empty or non-finite"
            )));
        }
        Ok(Self { start, end, cells })
    }

    pub fn width(&self) -> f64 {
        (self.end - self.start) / self.cells as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.cells {
            self.end
        } else {
            self.start + k as f64 * self.width()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells).map(|k| self.node(k))
    }
}

/// Samples `y(t) = e^{A t} b` on every node of `grid` (taken relative to
/// `grid.start`), stepping with one precomputed `e^{A h}`.
pub fn propagate(a: &Matrix, b: &[f64], grid: &UniformGrid) -> Result<Vec<Vec<f64>>> {
    if a.cols != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, b has length {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    let step = mat_exp(a, grid.width())?;
    let mut out = Vec::with_capacity(grid.cells + 1);
    let mut y = b.to_vec();
    out.push(y.clone());
    for _ in 0..grid.cells {
        y = step.mul_vec(&y);
        out.push(y.clone());
    }
    if out.last().is_some_and(|y| y.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("propagate"));
    }
    Ok(out)
}

/// Composite trapezoidal rule over equally spaced samples.
pub fn integrate_samples(values: &[f64], cell_width: f64) -> f64 {
    match values {
        [] => 0.0,
        [_] => 0.0,
        [first, inner @ .., last] => {
            let interior: f64 = inner.iter().sum();
            cell_width * (0.5 * (first + last) + interior)
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Truncated Taylor series, summed until the terms stop contributing.
    fn taylor_exp(a: &Matrix, t: f64) -> Matrix {
        let at = a.scale(t);
        let n = a.rows();
        let mut sum = Matrix::identity(n);
        let mut term = Matrix::identity(n);
        for k in 1..200 {
            term = term.matmul(&at).scale(1.0 / k as f64);
            sum = sum.add_scaled(&term, 1.0);
            if term.max_abs() < 1e-18 * sum.max_abs() {
                break;
            }
        }
        sum
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        a.add_scaled(b, -1.0).max_abs() / b.max_abs()
    }

    #[test]
    fn zero_matrix_exponential_is_identity() {
        let e = mat_exp(&Matrix::zeros(2, 2), 5.0).unwrap();
        assert_eq!(e, Matrix::identity(2));
    }

    #[test]
    fn scalar_exponential() {
        let e = mat_exp(&Matrix::diag(&[1.0]), 2.0).unwrap();
        assert!((e[(0, 0)] - 2f64.exp()).abs() < 1e-14 * 2f64.exp());
    }

    #[test]
    fn nilpotent_matches_taylor() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let e = mat_exp(&a, 3.0).unwrap();
        let oracle = taylor_exp(&a, 3.0);
        assert_eq!(oracle, Matrix::from_rows(&[vec![1.0, 3.0], vec![0.0, 1.0]]).unwrap());
        assert!(rel_err(&e, &oracle) < 1e-15);
    }

    #[test]
    fn every_pade_branch_matches_taylor() {
        let a = Matrix::from_rows(&[vec![-0.3, 0.8, 0.1], vec![-0.5, 0.2, 0.4], vec![0.3, -0.7, -0.1]]).unwrap();
        // ‖A‖₁ ≈ 1.7: t sweeps norms through every order and into squaring.
        for &t in &[0.005, 0.1, 0.5, 1.1, 2.5, 7.0] {
            let e = mat_exp(&a, t).unwrap();
            let err = rel_err(&e, &taylor_exp(&a, t));
            assert!(err < 1e-13, "t = {t}: rel err {err}");
        }
    }

    #[test]
    fn non_square_rejected() {
        let a = Matrix::zeros(2, 3);
        assert!(matches!(mat_exp(&a, 1.0), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn overflow_is_non_finite() {
        let a = Matrix::diag(&[1e300]);
        assert!(matches!(mat_exp(&a, 1e10), Err(Error::NonFinite(_))));
        let b = Matrix::diag(&[800.0]);
        assert!(matches!(mat_exp(&b, 1.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn propagate_constant_and_scalar() {
        let grid = UniformGrid::new(0.0, 3.0, 7).unwrap();
        let ys = propagate(&Matrix::zeros(2, 2), &[1.0, 2.0], &grid).unwrap();
        assert_eq!(ys.len(), 8);
        assert!(ys.iter().all(|y| y == &vec![1.0, 2.0]));

        let grid = UniformGrid::new(0.0, 1.0, 2).unwrap();
        let ys = propagate(&Matrix::diag(&[1.0]), &[1.0], &grid).unwrap();
        let want = [1.0, 0.5f64.exp(), 1f64.exp()];
        for (y, w) in ys.iter().zip(want) {
            assert!((y[0] - w).abs() < 1e-14 * w);
        }
    }

    #[test]
    fn propagate_rotation() {
        let a = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let grid = UniformGrid::new(0.0, 2.0 * std::f64::consts::PI, 4).unwrap();
        let ys = propagate(&a, &[1.0, 0.0], &grid).unwrap();
        for (k, y) in ys.iter().enumerate() {
            let t = grid.node(k);
            assert!((y[0] - t.cos()).abs() < 1e-13, "k={k}");
            assert!((y[1] - t.sin()).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn propagate_overflow_reported() {
        let grid = UniformGrid::new(0.0, 1000.0, 100).unwrap();
        assert!(matches!(
            propagate(&Matrix::diag(&[1.0]), &[1.0], &grid),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(integrate_samples(&[1.0, 1.0, 1.0], 0.5), 1.0);
        assert_eq!(integrate_samples(&[0.0, 1.0], 1.0), 0.5);

        let k = 10_000;
        let h = 2.0 / k as f64;
        let vals: Vec<f64> = (0..=k).map(|i| (2.0 * i as f64 * h).exp()).collect();
        let exact = (4f64.exp() - 1.0) / 2.0;
        assert!((integrate_samples(&vals, h) - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn solve_and_det() {
        let a = Matrix::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]).unwrap();
        assert!((a.det().unwrap() + 6.0).abs() < 1e-15);
        let x = a.solve(&Matrix::identity(2)).unwrap();
        let prod = a.matmul(&x);
        assert!(rel_err(&prod, &Matrix::identity(2)) < 1e-15);
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(s.det().unwrap(), 0.0);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::NAN]).is_err());
    }
}
