use std::process::ExitCode;

fn main() -> ExitCode {
    quasi_similarity::cli::main_with_args(std::env::args_os())
}
