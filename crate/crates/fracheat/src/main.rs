use std::io::Write;

fn main() {
    let code = fracheat::cli::run();
    // exit skips destructors, so push buffered output out first
    let _ = std::io::stdout().flush();
    let _ = std::io::stderr().flush();
    std::process::exit(code);
}
