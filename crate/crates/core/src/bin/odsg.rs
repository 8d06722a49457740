fn main() {
    std::process::exit(odsg::cli::run(std::env::args_os()));
}
