fn main() {
    std::process::exit(fedcvr::cli::run());
}
