fn main() {
    std::process::exit(taskframe::cli::dispatch(std::env::args_os()));
}
