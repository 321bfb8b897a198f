fn main() {
    std::process::exit(thermoform::cli::run(std::env::args_os()));
}
