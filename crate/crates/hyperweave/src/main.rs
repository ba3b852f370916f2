fn main() {
    std::process::exit(hyperweave::cli::run(std::env::args()));
}
