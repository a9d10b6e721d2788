fn main() {
    std::process::exit(bandchol_cli::main_with_args(std::env::args_os()));
}
