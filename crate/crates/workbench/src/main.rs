fn main() -> std::process::ExitCode {
    lfd_workbench::cli::main(std::env::args_os())
}
