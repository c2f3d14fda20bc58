fn main() {
    std::process::exit(tracest_core::cli::main());
}
