fn main() {
    std::process::exit(medflow::cli::run(std::env::args_os()));
}
