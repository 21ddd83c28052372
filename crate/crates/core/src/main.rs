fn main() {
    std::process::exit(rhetoric::cli::main_with_args(std::env::args_os()));
}
