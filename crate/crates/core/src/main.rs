fn main() {
    std::process::exit(freqcrystal::cli::run(std::env::args_os()));
}
