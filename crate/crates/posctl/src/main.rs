fn main() {
    std::process::exit(posctl::run());
}
