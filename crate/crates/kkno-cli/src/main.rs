fn main() {
    std::process::exit(kkno_cli::cli_main());
}
