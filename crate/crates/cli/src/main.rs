fn main() {
    std::process::exit(qsense_cli::run(std::env::args_os()));
}
