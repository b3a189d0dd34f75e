fn main() {
    std::process::exit(sensdyn::cli::run());
}
