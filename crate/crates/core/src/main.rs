use std::process::ExitCode;

fn main() -> ExitCode {
    dcc_sim::cli::main_with_args(std::env::args_os())
}
