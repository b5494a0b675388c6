fn main() {
    std::process::exit(tentlab::cli::run_command(std::env::args_os()));
}
