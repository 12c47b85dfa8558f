use std::process::ExitCode;

fn main() -> ExitCode {
    stcsim::cli::main()
}
