fn main() {
    std::process::exit(filtlab::cli::main_with(std::env::args_os()));
}
