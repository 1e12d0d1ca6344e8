fn main() {
    std::process::exit(lpdiss::cli::run(std::env::args_os()));
}
