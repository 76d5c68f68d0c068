fn main() {
    std::process::exit(bucketann::cli::main_with_args(std::env::args_os()));
}
