fn main() {
    std::process::exit(eswap::cli::run(std::env::args_os()));
}
