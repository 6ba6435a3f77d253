fn main() {
    std::process::exit(mmwave_blockage::cli::run(std::env::args_os()));
}
