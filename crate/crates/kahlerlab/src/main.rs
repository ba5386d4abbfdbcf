fn main() {
    if let Err(e) = kahlerlab::cli::configure_workers() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
    std::process::exit(kahlerlab::cli::run(std::env::args_os()));
}
