fn main() {
    std::process::exit(mogro::cli::cli_run(std::env::args_os()));
}
