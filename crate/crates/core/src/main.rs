fn main() {
    std::process::exit(pgwave::cli::run(std::env::args_os()));
}
