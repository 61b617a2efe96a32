fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(jtcs::cli::parse_and_run(&argv));
}
