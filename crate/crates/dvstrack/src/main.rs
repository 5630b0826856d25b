use std::process::ExitCode;

fn main() -> ExitCode {
    match dvstrack::run(std::env::args_os().skip(1)) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dvstrack: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
