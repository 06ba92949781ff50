fn main() {
    std::process::exit(edgeroll::cli::run_cli(std::env::args_os()));
}
