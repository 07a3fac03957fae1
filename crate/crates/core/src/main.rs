fn main() {
    std::process::exit(asymalign::cli::main_with_args(std::env::args_os()));
}
