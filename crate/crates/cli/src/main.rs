fn main() {
    std::process::exit(qnet_cli::main_with(std::env::args_os()));
}
