fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(ptm_cli::run(argv));
}
