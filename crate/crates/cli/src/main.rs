fn main() {
    std::process::exit(capstruct_cli::run(std::env::args_os()));
}
