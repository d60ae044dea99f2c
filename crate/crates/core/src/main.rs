use std::process::ExitCode;

fn main() -> ExitCode {
    lens_interference::cli::run(std::env::args_os())
}
