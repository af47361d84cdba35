fn main() {
    std::process::exit(varreg::bench::cli_main(std::env::args_os()));
}
