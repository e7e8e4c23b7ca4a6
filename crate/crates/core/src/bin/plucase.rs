fn main() {
    std::process::exit(plucase::cli::run(std::env::args_os()));
}
