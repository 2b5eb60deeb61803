fn main() {
    std::process::exit(mixclt::cli::parse_and_dispatch(std::env::args()));
}
