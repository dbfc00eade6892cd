fn main() {
    std::process::exit(pic_turbo::cli::main_with_args(std::env::args_os()));
}
