fn main() {
    std::process::exit(loewner_modal::cli::run());
}
