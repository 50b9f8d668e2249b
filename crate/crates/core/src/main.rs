fn main() {
    std::process::exit(faultlab::cli::main_with_args(std::env::args_os()));
}
