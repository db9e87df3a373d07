fn main() {
    std::process::exit(rankvar::cli::run());
}
