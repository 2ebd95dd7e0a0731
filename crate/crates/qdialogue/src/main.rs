use clap::Parser;

fn main() {
    let cli = qdialogue::cli::Cli::parse();
    if let Err(e) = qdialogue::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(qdialogue::cli::exit_code(&e));
    }
}
