fn main() {
    std::process::exit(backdoor_lab::cli::main());
}
