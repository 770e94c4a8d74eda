fn main() {
    std::process::exit(hpc::cli::run());
}
