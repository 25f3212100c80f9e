//! Driving the runner from code: TOML configuration, overrides, execution and report files.

use spde_lab::cli::{execute, Command, RunConfig};
use spde_lab::experiments::Threads;

const CONFIG: &str = r#"
scheme = "linear-implicit-euler"

[model]
kind = "diagonal-additive"
modes = 64

[grid]
N = [4, 8, 16]
N_ref = 64
"#;

fn main() -> spde_lab::Result<()> {
    let dir = std::env::temp_dir().join("spde-lab-example");
    std::fs::create_dir_all(&dir)?;
    let out = dir.join("oracle-check.json");
    let overrides = vec!["mc.samples=2000".to_string(), format!("output.path={:?}", out.display().to_string()), "output.format=\"json\"".into()];
    let cfg = RunConfig::from_toml_with_overrides(CONFIG, &overrides)?.resolve(Command::OracleCheck)?;
    let outcome = execute(Command::OracleCheck, &cfg, Threads::Auto)?;
    print!("{}", outcome.summary);
    println!("wrote {}", outcome.path.display());

    let cfg = RunConfig::from_toml_with_overrides("", &[format!("output.path={:?}", dir.join("lb.csv").display().to_string())])?
        .resolve(Command::LowerBound)?;
    let outcome = execute(Command::LowerBound, &cfg, Threads::Auto)?;
    print!("{}", outcome.summary);
    println!("{}", std::fs::read_to_string(&outcome.path)?.lines().take(4).collect::<Vec<_>>().join("\n"));
    Ok(())
}
