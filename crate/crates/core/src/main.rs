use std::process::ExitCode;

fn main() -> ExitCode {
    kernel_lattice::cli::main_with_args(std::env::args_os())
}
