fn main() {
    std::process::exit(obsyn::cli::run(std::env::args_os()));
}
