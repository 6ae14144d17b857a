fn main() {
    std::process::exit(ddx_harness::cli::run(std::env::args_os()));
}
