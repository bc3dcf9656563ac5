fn main() {
    std::process::exit(spiked_wigner::cli::run());
}
