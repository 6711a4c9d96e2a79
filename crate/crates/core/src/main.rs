fn main() {
    std::process::exit(dwmsa::cli::run(std::env::args_os()));
}
