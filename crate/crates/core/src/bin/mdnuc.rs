fn main() {
    std::process::exit(mdnuc::cli::run(std::env::args_os()));
}
