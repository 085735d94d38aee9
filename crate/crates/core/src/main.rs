fn main() {
    std::process::exit(iobound::run());
}
