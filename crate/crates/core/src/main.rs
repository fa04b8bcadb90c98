fn main() {
    // exit quietly when the reader of stdout goes away (`gibbsfluct ... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(gibbsfluct::cli::run(std::env::args_os()));
}
