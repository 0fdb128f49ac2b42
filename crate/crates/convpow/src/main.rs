use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(convpow::cli::run())
}
