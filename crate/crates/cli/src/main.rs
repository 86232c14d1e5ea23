fn main() {
    std::process::exit(octsca_cli::main_with_args(std::env::args_os()));
}
