use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(kbv::cli::cli_main(std::env::args_os()) as u8)
}
