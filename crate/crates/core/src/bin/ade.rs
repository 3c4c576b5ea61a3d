fn main() {
    std::process::exit(ade::cli::main_from_env());
}
