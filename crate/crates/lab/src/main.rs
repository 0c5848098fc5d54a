fn main() {
    std::process::exit(pint_lab::cli::main_with_args(std::env::args_os()));
}
