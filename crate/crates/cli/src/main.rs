fn main() {
    std::process::exit(wordprune_cli::main_with(std::env::args_os()));
}
