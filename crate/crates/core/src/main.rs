fn main() {
    std::process::exit(acfid::cli::main_with_args(std::env::args_os()));
}
