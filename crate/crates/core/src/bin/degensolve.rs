fn main() {
    std::process::exit(degensolve::cli::main_with(std::env::args_os()));
}
