fn main() {
    std::process::exit(quantor::cli::run(std::env::args_os()));
}
