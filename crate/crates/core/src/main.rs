fn main() {
    std::process::exit(stmtbugs::cli::run(std::env::args_os()));
}
