fn main() {
    std::process::exit(identikit::cli::run(std::env::args_os()));
}
