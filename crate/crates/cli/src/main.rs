fn main() {
    std::process::exit(rphar_cli::main_with_args(std::env::args_os()));
}
