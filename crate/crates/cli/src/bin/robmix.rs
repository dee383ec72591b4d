fn main() {
    std::process::exit(robmix::run(std::env::args_os()));
}
