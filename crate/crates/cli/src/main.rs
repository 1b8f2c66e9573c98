use std::io::{self, IsTerminal};

fn main() {
    let stdin = io::stdin();
    let echo = !stdin.is_terminal();
    let code = provlog_cli::run(
        std::env::args_os(),
        &mut stdin.lock(),
        &mut io::stdout().lock(),
        &mut io::stderr(),
        echo,
    );
    std::process::exit(code);
}
