use std::process::ExitCode;

fn main() -> ExitCode {
    freqsev_harness::cli::main()
}
