fn main() {
    std::process::exit(quack::cli::run(std::env::args_os()));
}
