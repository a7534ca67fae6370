fn main() {
    std::process::exit(nisq_reservoir::cli::run(std::env::args_os()));
}
