//! Bundled example configs.

use std::path::Path;

use anyhow::Result;

/// The ten convergent schemes of the least-squares comparison table.
pub const TABLE2_SCHEMES: [&str; 10] = [
    "RGD-Cay-M",
    "RGD-SR-M",
    "hRN-Cay-e",
    "hRN-SR-e",
    "hRN-Cay-M",
    "hRN-SR-M",
    "hRiN-Cay-e",
    "hRiN-SR-e",
    "hRiN-Cay-M",
    "hRiN-SR-M",
];

fn table2() -> String {
    let schemes = TABLE2_SCHEMES
        .iter()
        .map(|s| format!("\"{s}\""))
        .collect::<Vec<_>>()
        .join(", ");
    format!(
        r#"name = "least-squares"
output = "out"
tol = 1e-10
theta = 1e-4
mxit = 5000
newton_mxit = 50
schemes = [{schemes}]

[theta_by_metric]
e = 1e-5

[problem]
family = "least-squares"
n = 50
k = 6
seed = 1
"#
    )
}

const TRACE: &str = r#"name = "trace"
output = "out"
tol = 1e-10
mxit = 5000
methods = ["RGD"]
metrics = ["e", "M"]
retractions = ["Cay", "SR"]

[problem]
family = "trace"
n = 200
k = 5
seed = 1
"#;

const GYROSCOPIC: &str = r#"name = "gyroscopic"
output = "out"
tol = 1e-10
mxit = 5000
methods = ["RGD", "hRiN"]
metrics = ["M"]
retractions = ["Cay", "SR"]

[problem]
family = "gyroscopic"
n = 100
k = 5
"#;

const QUARTIC: &str = r#"name = "quartic"
output = "out"
tol = 1e-8
theta = 1e-3
mxit = 5000
methods = ["RGD", "hRiN"]
metrics = ["c", "e"]
retractions = ["Cay", "SR"]

[problem]
family = "quartic"
n = 10
seed = 1
"#;

/// `(directory, config text)` for every bundled example.
pub fn example_configs() -> Vec<(&'static str, String)> {
    vec![
        ("least-squares", table2()),
        ("trace", TRACE.to_string()),
        ("gyroscopic", GYROSCOPIC.to_string()),
        ("quartic", QUARTIC.to_string()),
    ]
}

/// Writes `<dir>/<name>/config.toml` for every bundled example.
pub fn write_examples(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    for (name, text) in example_configs() {
        let sub = dir.join(name);
        std::fs::create_dir_all(&sub)?;
        let path = sub.join("config.toml");
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn bundled_configs_validate() {
        for (name, text) in example_configs() {
            let cfg =
                ExperimentConfig::from_toml(&text).unwrap_or_else(|e| panic!("{name}: {e:#}"));
            assert!(!cfg.schemes().unwrap().is_empty());
        }
    }

    #[test]
    fn table2_has_ten_schemes() {
        let cfg = ExperimentConfig::from_toml(&table2()).unwrap();
        assert_eq!(cfg.schemes().unwrap().len(), 10);
    }
}
