fn main() {
    std::process::exit(supstate::cli::run_from(std::env::args_os()));
}
