fn main() {
    std::process::exit(dynkit::cli_main());
}
