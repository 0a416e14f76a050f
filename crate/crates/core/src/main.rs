fn main() {
    std::process::exit(anisoflow::cli::main_with_args(std::env::args_os()));
}
