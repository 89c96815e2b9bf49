fn main() {
    std::process::exit(negrec::cli::dispatch(std::env::args()));
}
