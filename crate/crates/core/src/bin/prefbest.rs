fn main() {
    std::process::exit(prefbest::cli::dispatch(std::env::args_os()));
}
