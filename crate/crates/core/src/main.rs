fn main() {
    std::process::exit(iqkd::cli::main_with_args(std::env::args_os()));
}
