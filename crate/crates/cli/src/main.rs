fn main() {
    std::process::exit(aggdec_cli::run(std::env::args_os()));
}
