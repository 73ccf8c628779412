fn main() {
    std::process::exit(hml_cli::run_from(std::env::args_os()));
}
