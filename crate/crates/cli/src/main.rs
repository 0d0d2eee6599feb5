fn main() {
    std::process::exit(tcmpc_cli::run(std::env::args_os()));
}
