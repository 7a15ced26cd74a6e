use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(voxsel_cli::run(std::env::args_os()))
}
