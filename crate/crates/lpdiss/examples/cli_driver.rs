//! Driving the command-line front end from code: a config file run and a
//! region table.

use std::path::Path;

use lpdiss::cli;

fn main() -> std::io::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    let dir = tempfile::tempdir()?;
    let config = dir.path().join("run.json");
    let operator = data.join("diag19.json");
    let text = format!(
        r#"{{"command": "check", "operator": {{"op": "diagonal", "blocks": [{}]}}, "p": 10, "plan": {{"seed": 7}}}}"#,
        std::fs::read_to_string(&operator)?.trim()
    );
    std::fs::write(&config, text)?;

    let code = cli::run(["lpdiss", "--config", config.to_str().unwrap()]);
    println!("exit code {code}");

    let code = cli::run(["lpdiss", "region", "--op", "elasticity", "--values", "0,0.3,0.45", "--format", "csv"]);
    println!("exit code {code}");
    Ok(())
}
