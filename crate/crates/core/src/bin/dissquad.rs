fn main() -> std::process::ExitCode {
    dissquad::cli::main()
}
