fn main() {
    std::process::exit(quantum_mirror::cli::main_with_args(std::env::args_os()));
}
