fn main() {
    std::process::exit(recipbp::cli::run(std::env::args_os()));
}
