fn main() -> std::process::ExitCode {
    nonlocality_cli::main_entry()
}
