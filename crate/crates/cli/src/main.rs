fn main() {
    std::process::exit(dronesched_cli::run(std::env::args_os()));
}
