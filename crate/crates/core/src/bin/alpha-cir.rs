fn main() {
    std::process::exit(alpha_cir::cli::run(std::env::args_os()));
}
