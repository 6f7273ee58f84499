fn main() {
    std::process::exit(drstd::cli::run(std::env::args_os()));
}
