use std::process::ExitCode;

fn main() -> ExitCode {
    mctf::cli::run()
}
