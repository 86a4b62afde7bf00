fn main() {
    std::process::exit(rotstar::cli::run(std::env::args_os()));
}
