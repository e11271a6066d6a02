fn main() {
    isodimer::cli::run();
}
