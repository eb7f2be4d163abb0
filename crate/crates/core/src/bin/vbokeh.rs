fn main() {
    std::process::exit(vbokeh::cli::run(std::env::args_os()));
}
