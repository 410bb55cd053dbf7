fn main() {
    std::process::exit(flowroi_cli::run(std::env::args_os()));
}
