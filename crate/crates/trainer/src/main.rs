use clap::Parser;

fn main() -> anyhow::Result<()> {
    rescue_trainer::cli::run(rescue_trainer::cli::Cli::parse())
}
