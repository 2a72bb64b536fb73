fn main() {
    std::process::exit(sigkernel::cli::run(std::env::args_os()));
}
