fn main() {
    std::process::exit(mdr_core::cli::run(std::env::args_os()));
}
