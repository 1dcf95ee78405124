fn main() -> std::process::ExitCode {
    fad::cli::main_with_args(std::env::args_os())
}
