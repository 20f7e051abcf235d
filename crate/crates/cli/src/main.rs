use clap::Parser;

fn main() {
    let cli = kout_cli::Cli::parse();
    std::process::exit(kout_cli::run(&cli));
}
