fn main() {
    std::process::exit(wabc_cli::run(std::env::args_os()));
}
