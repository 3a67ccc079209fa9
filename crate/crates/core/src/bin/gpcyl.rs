use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gp_cylinder::cli::run_from(std::env::args_os()))
}
