fn main() {
    kdvaw::cli::init_logging();
    std::process::exit(kdvaw::cli::run_cli(std::env::args_os()));
}
