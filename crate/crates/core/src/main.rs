use clap::Parser;

fn main() {
    std::process::exit(hlcft::cli::run(hlcft::cli::Cli::parse()));
}
