fn main() {
    std::process::exit(pickfreeze::cli::run(std::env::args_os()));
}
