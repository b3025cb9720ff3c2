// Run a TOML scenario end to end and write its artifacts with a manifest.

use qadditivity::scenario::{self, ScenarioConfig};

const CONFIG: &str = r#"
title = "exchange-free dephasing, short grid"
rules = ["bare", "minimal_dissipation"]

[model]
kind = "dephasing"
omega_a = 1.0
omega_b = 2.0
coupling = 0.3
p1_a = 0.7
p1_b = 0.25

[grid]
start = 0.0
stop = 3.0
points = 13

[tolerances]
additivity = 1e-9
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ScenarioConfig::from_toml_str(CONFIG)?;
    let outputs = scenario::run(&cfg)?;
    let dir = std::env::temp_dir().join(format!("qadd-example-{}", std::process::id()));
    let mut files: Vec<(&str, &[u8])> = vec![("thermo.csv", &outputs.thermo_csv), ("additivity.txt", outputs.report.as_bytes())];
    if let Some(fig) = &outputs.figure_csv {
        files.push(("figure.csv", fig));
    }
    let manifest = scenario::write_outputs(&dir, "run", CONFIG, "manifest.json", &files, &outputs.warnings)?;
    for o in &manifest.outputs {
        println!("{} {}", o.sha256, o.file);
    }
    for line in outputs.report.lines().filter(|l| l.starts_with("rule:") || l.starts_with("weak:")) {
        println!("{line}");
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
