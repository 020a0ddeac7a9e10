fn main() {
    std::process::exit(spsim::run(std::env::args_os()));
}
