fn main() {
    std::process::exit(gpcond_cli::execute(std::env::args_os()));
}
