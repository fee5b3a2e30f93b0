fn main() {
    std::process::exit(gm3_core::cli::run_cli(std::env::args_os()));
}
