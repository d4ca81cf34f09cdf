fn main() {
    std::process::exit(geodrag::cli::run());
}
