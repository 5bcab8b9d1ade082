use clap::Parser;

fn main() {
    let cli = srl_runtime::cli::Cli::parse();
    if let Err(e) = srl_runtime::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
