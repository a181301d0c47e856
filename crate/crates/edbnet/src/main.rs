fn main() {
    std::process::exit(edbnet::cli::run(std::env::args_os()));
}
