fn main() {
    std::process::exit(hida::cli::run());
}
