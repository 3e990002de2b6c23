fn main() {
    std::process::exit(sarcasm::cli::main_with_env());
}
