fn main() {
    std::process::exit(prodramsey::cli::main());
}
