use clap::Parser;

fn main() {
    let cli = actsched_cli::Cli::parse();
    if let Err(e) = actsched_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
