fn main() {
    std::process::exit(compop::cli::run(std::env::args_os()));
}
