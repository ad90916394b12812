fn main() -> std::process::ExitCode {
    hstab::cli::main()
}
