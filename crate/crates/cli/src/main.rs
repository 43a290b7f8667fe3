fn main() {
    std::process::exit(critflow_cli::run(std::env::args()));
}
