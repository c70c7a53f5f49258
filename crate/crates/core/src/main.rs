fn main() {
    std::process::exit(diffabs::cli::run(std::env::args_os()));
}
