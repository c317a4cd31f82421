//! Scenario specification files: flat `key = value` blocks separated by
//! blank lines, `#` comments. Keys `k`, `n_k`, `p`, and `pi_j1` are required
//! per block; `rho`, `c1`, `c2` default to zero and the run parameters
//! (`replicates`, `permutations`, `alpha`, `seed`) fall back to the
//! command-line defaults.

use scmanova::simulation::Scenario;

/// Run-parameter defaults applied to blocks that do not set them.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioDefaults {
    pub replicates: usize,
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
}

pub fn parse_scenarios(text: &str, defaults: &ScenarioDefaults) -> Result<Vec<Scenario>, String> {
    let mut scenarios = Vec::new();
    let mut offenders = Vec::new();
    for (block_no, block) in split_blocks(text).into_iter().enumerate() {
        match parse_block(&block, defaults) {
            Ok(sc) => match sc.validate() {
                Ok(()) => scenarios.push(sc),
                Err(e) => offenders.push(format!("scenario {}: {e}", block_no + 1)),
            },
            Err(e) => offenders.push(format!("scenario {}: {e}", block_no + 1)),
        }
    }
    if !offenders.is_empty() {
        return Err(offenders.join("\n"));
    }
    if scenarios.is_empty() {
        return Err("no scenarios found".into());
    }
    Ok(scenarios)
}

fn split_blocks(text: &str) -> Vec<Vec<(String, String)>> {
    let mut blocks = Vec::new();
    let mut current: Vec<(String, String)> = Vec::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (key, value) = match line.split_once('=') {
            Some((k, v)) => (k.trim().to_string(), v.trim().to_string()),
            None => (line.to_string(), String::new()),
        };
        current.push((key, value));
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    blocks
}

fn parse_block(
    entries: &[(String, String)],
    defaults: &ScenarioDefaults,
) -> Result<Scenario, String> {
    let mut sc = Scenario {
        groups: 0,
        group_size: 0,
        variables: 0,
        rho: 0.0,
        c1: 0.0,
        c2: 0.0,
        pi_absence: f64::NAN,
        replicates: defaults.replicates,
        permutations: defaults.permutations,
        alpha: defaults.alpha,
        seed: defaults.seed,
    };
    let (mut saw_k, mut saw_nk, mut saw_p, mut saw_pi) = (false, false, false, false);
    for (key, value) in entries {
        let parse_usize = || -> Result<usize, String> {
            value
                .parse()
                .map_err(|_| format!("{key}: '{value}' is not a positive integer"))
        };
        let parse_f64 = || -> Result<f64, String> {
            value
                .parse()
                .map_err(|_| format!("{key}: '{value}' is not a number"))
        };
        match key.as_str() {
            "k" | "groups" => {
                sc.groups = parse_usize()?;
                saw_k = true;
            }
            "n_k" | "group_size" => {
                sc.group_size = parse_usize()?;
                saw_nk = true;
            }
            "p" | "variables" => {
                sc.variables = parse_usize()?;
                saw_p = true;
            }
            "pi_j1" | "pi_absence" => {
                sc.pi_absence = parse_f64()?;
                saw_pi = true;
            }
            "rho" => sc.rho = parse_f64()?,
            "c1" => sc.c1 = parse_f64()?,
            "c2" => sc.c2 = parse_f64()?,
            "replicates" => sc.replicates = parse_usize()?,
            "permutations" => sc.permutations = parse_usize()?,
            "alpha" => sc.alpha = parse_f64()?,
            "seed" => {
                sc.seed = value
                    .parse()
                    .map_err(|_| format!("seed: '{value}' is not an unsigned integer"))?;
            }
            other => return Err(format!("unknown key '{other}'")),
        }
    }
    let mut missing = Vec::new();
    if !saw_k {
        missing.push("k");
    }
    if !saw_nk {
        missing.push("n_k");
    }
    if !saw_p {
        missing.push("p");
    }
    if !saw_pi {
        missing.push("pi_j1");
    }
    if !missing.is_empty() {
        return Err(format!("missing required keys: {}", missing.join(", ")));
    }
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> ScenarioDefaults {
        ScenarioDefaults {
            replicates: 100,
            permutations: 199,
            alpha: 0.05,
            seed: 42,
        }
    }

    #[test]
    fn parses_single_block_with_defaults() {
        let text = "# level scenario\nk = 2\nn_k = 10\np = 50\npi_j1 = 0.2\n";
        let scenarios = parse_scenarios(text, &defaults()).unwrap();
        assert_eq!(scenarios.len(), 1);
        let sc = &scenarios[0];
        assert_eq!(sc.groups, 2);
        assert_eq!(sc.group_size, 10);
        assert_eq!(sc.variables, 50);
        assert_eq!(sc.pi_absence, 0.2);
        assert_eq!(sc.rho, 0.0);
        assert_eq!(sc.replicates, 100);
        assert_eq!(sc.permutations, 199);
        assert_eq!(sc.seed, 42);
    }

    #[test]
    fn parses_multiple_blocks_and_overrides() {
        let text = "k = 2\nn_k = 5\np = 50\npi_j1 = 0.2\nc1 = 1\n\n\
                    k = 4\nn_k = 10\np = 100\npi_j1 = 0.5\nrho = 0.4\nreplicates = 7\nseed = 9\n";
        let scenarios = parse_scenarios(text, &defaults()).unwrap();
        assert_eq!(scenarios.len(), 2);
        assert_eq!(scenarios[0].c1, 1.0);
        assert_eq!(scenarios[1].groups, 4);
        assert_eq!(scenarios[1].rho, 0.4);
        assert_eq!(scenarios[1].replicates, 7);
        assert_eq!(scenarios[1].seed, 9);
    }

    #[test]
    fn lists_offending_values() {
        let text = "k = 1\nn_k = 10\np = 50\npi_j1 = 1.4\n";
        let err = parse_scenarios(text, &defaults()).unwrap_err();
        assert!(err.contains("groups"), "{err}");
        assert!(err.contains("pi_absence"), "{err}");
    }

    #[test]
    fn rejects_unknown_keys_and_missing_required() {
        let err = parse_scenarios("k = 2\nbogus = 1\n", &defaults()).unwrap_err();
        assert!(err.contains("unknown key 'bogus'"), "{err}");
        let err2 = parse_scenarios("k = 2\nn_k = 5\n", &defaults()).unwrap_err();
        assert!(err2.contains("missing required keys"), "{err2}");
        assert!(err2.contains("p, pi_j1"), "{err2}");
    }
}
