fn main() {
    std::process::exit(hprg_secagg::cli::run(std::env::args_os()));
}
