fn main() {
    std::process::exit(fxscale::cli::main_with_args(std::env::args_os()));
}
