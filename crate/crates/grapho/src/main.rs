fn main() {
    std::process::exit(grapho::cli::run(std::env::args_os()));
}
