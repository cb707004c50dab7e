fn main() -> std::process::ExitCode {
    ecodrive::cli::main()
}
