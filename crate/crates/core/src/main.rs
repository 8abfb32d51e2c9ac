fn main() {
    std::process::exit(qdcut::cli::main_with_args(std::env::args_os()));
}
