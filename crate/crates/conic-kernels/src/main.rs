fn main() {
    std::process::exit(conic_kernels::cli::run());
}
