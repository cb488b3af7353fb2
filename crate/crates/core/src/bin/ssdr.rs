fn main() {
    std::process::exit(ssdr::cli::cli_main(std::env::args_os()));
}
