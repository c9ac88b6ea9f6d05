fn main() {
    std::process::exit(polycast::cli::run());
}
