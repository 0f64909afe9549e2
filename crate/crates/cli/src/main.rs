use clap::Parser;

fn main() {
    let cli = mbc_cli::Cli::parse();
    if let Err(e) = mbc_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
