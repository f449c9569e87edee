fn main() {
    std::process::exit(quantprec::cli::main_with_args(std::env::args_os()));
}
