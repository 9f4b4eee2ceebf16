fn main() {
    std::process::exit(dwbec::cli::main_with_args(std::env::args_os()));
}
