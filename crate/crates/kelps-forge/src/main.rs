fn main() {
    // Dying quietly on a closed pipe beats a panic when output is piped
    // through head or less.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(kelps_forge::cli::run_cli(std::env::args()));
}
