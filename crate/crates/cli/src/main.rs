use clap::Parser;

fn main() {
    let cli = oclust_cli::Cli::parse();
    if let Err(e) = oclust_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
