fn main() {
    let code = shimura_core::cli::run(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
