use clap::Parser;

fn main() {
    let cli = newsframe_cli::Cli::parse();
    if let Err(e) = newsframe_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
