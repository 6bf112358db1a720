fn main() {
    std::process::exit(opshift::cli::run(std::env::args_os()));
}
