fn main() {
    std::process::exit(presidential::cli::run());
}
