fn main() {
    std::process::exit(locsol_cli::main_with_args(std::env::args_os()));
}
