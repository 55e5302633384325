fn main() {
    std::process::exit(xel_cli::run(std::env::args()));
}
