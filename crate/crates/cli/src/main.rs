fn main() {
    std::process::exit(grouprisk_cli::main_with(std::env::args_os()));
}
