use std::io::Write;
use std::process::ExitCode;

fn main() -> ExitCode {
    match arrowgap::cli::main_with(std::env::args_os()) {
        Ok((text, code)) => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::from(code as u8)
        }
        Err(e) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
