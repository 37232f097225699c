fn main() {
    std::process::exit(uqd_cli::run(std::env::args_os()));
}
