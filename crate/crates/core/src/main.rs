fn main() {
    std::process::exit(dosc_sim::cli::main_with_args(std::env::args_os()));
}
