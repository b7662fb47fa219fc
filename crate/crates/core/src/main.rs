use std::process::ExitCode;

fn main() -> ExitCode {
    oligopoly::cli::main_with(std::env::args_os())
}
