fn main() {
    std::process::exit(uavnet::cli::cli_main(std::env::args_os()));
}
