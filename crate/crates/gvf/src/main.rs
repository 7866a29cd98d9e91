fn main() {
    std::process::exit(gvf::run(std::env::args_os()));
}
