use std::process::ExitCode;

fn main() -> ExitCode {
    relaysim::cli::run()
}
