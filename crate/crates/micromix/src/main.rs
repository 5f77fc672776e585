fn main() {
    std::process::exit(micromix::cli::run(std::env::args()));
}
