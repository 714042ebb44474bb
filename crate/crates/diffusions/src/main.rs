fn main() {
    std::process::exit(entrance_diffusions::cli::run())
}
