fn main() {
    std::process::exit(chirp_mi::harness::cli::run(std::env::args_os()));
}
