fn main() {
    std::process::exit(tiergate::interface::cli::main_with_env());
}
