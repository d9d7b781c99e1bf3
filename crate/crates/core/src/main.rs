fn main() {
    std::process::exit(madmm::cli::run(std::env::args_os()));
}
