fn main() {
    std::process::exit(tmkit::cli::main_with_std());
}
