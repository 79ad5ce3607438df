fn main() {
    std::process::exit(qec_chi::cli::run(std::env::args_os()));
}
