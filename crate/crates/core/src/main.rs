fn main() {
    std::process::exit(persona_probe::cli::run(std::env::args_os()));
}
