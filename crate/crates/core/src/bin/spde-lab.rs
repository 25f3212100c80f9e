fn main() -> std::process::ExitCode {
    spde_lab::cli::main_with_args(std::env::args_os())
}
