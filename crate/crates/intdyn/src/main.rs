fn main() {
    std::process::exit(intdyn::cli::run());
}
