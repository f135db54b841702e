fn main() -> std::process::ExitCode {
    treetails::cli::main_with_args(std::env::args_os())
}
