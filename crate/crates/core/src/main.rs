fn main() -> anyhow::Result<()> {
    let code = shortcut_lab::cli::run(std::env::args_os());
    std::process::exit(code)
}
