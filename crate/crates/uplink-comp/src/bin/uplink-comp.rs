fn main() {
    std::process::exit(uplink_comp::cli::run(std::env::args_os()));
}
