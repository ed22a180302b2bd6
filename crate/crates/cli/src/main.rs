use clap::Parser;

fn main() {
    let cli = suptest_cli::Cli::parse();
    std::process::exit(suptest_cli::execute(cli));
}
