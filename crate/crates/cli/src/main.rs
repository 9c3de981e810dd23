fn main() {
    std::process::exit(robust_recon::run_cli(std::env::args_os()));
}
