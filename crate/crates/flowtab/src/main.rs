fn main() {
    std::process::exit(flowtab::run(std::env::args_os()));
}
