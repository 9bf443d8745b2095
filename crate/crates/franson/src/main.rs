fn main() {
    std::process::exit(franson::cli::run());
}
