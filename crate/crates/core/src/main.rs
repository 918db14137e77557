fn main() {
    std::process::exit(ghz_selftest::cli::main_with(std::env::args_os()));
}
