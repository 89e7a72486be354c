fn main() -> std::process::ExitCode {
    liptest::cli::main()
}
