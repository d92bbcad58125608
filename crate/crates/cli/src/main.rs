fn main() {
    std::process::exit(optmatch::run(std::env::args_os()));
}
