fn main() {
    std::process::exit(cagen::cli::run(std::env::args_os()));
}
