fn main() {
    let code = roughdelay::cli::main_with(std::env::args_os(), std::env::var_os(roughdelay::cli::OUT_ENV));
    std::process::exit(code);
}
