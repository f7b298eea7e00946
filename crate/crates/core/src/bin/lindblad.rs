fn main() {
    std::process::exit(lindblad_learn::cli::main());
}
