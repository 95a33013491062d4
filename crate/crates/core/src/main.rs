fn main() {
    std::process::exit(pmglm::cli::main());
}
