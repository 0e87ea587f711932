fn main() {
    std::process::exit(elastic_finsler::cli::run(std::env::args_os()));
}
