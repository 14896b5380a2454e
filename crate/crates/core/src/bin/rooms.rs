fn main() {
    std::process::exit(humemai::cli::main_with_args(std::env::args_os()));
}
