fn main() {
    std::process::exit(polydoa::cli::main_with_args(std::env::args_os()));
}
