fn main() {
    std::process::exit(fmpower_cli::run(std::env::args_os()));
}
