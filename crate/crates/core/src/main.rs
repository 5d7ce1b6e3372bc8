use std::process::ExitCode;

fn main() -> ExitCode {
    cfps::cli::main()
}
