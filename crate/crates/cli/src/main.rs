fn main() {
    std::process::exit(sbt_cli::main_with_args(std::env::args_os()));
}
