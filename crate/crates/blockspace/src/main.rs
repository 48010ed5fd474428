use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(blockspace::cli::run(std::env::args_os()))
}
