fn main() {
    std::process::exit(spbandit::cli::main());
}
