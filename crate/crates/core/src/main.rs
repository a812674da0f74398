use clap::Parser;

fn main() -> std::process::ExitCode {
    slodowy::cli::main_with(slodowy::cli::Cli::parse())
}
