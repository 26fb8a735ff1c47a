fn main() {
    std::process::exit(mordrive::cli::run(std::env::args_os()));
}
