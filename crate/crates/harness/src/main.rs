fn main() {
    std::process::exit(bayesrisk_harness::cli::main_with_args(std::env::args_os()));
}
