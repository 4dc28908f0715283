fn main() {
    std::process::exit(unipolar::cli::run(std::env::args_os()));
}
