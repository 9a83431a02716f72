fn main() {
    std::process::exit(cubeflag::cli::run_from(std::env::args_os()));
}
