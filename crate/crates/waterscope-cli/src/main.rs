fn main() {
    std::process::exit(waterscope_cli::run());
}
