fn main() {
    std::process::exit(lie_rdc::cli::main_with_args(std::env::args().collect()));
}
