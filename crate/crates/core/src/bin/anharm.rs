fn main() {
    std::process::exit(anharmonic::cli::main_with_args(std::env::args().skip(1)));
}
