fn main() {
    let code = grassmann_alpha_cli::run_app(std::env::args_os());
    std::process::exit(code);
}
