use std::process::ExitCode;

fn main() -> ExitCode {
    ctxplace::cli::main_with(std::env::args_os())
}
