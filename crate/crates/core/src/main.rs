fn main() {
    std::process::exit(mahal_boost::cli::run(std::env::args_os()));
}
