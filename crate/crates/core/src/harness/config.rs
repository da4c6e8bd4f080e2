//! Flat `key = value` scenario files.
//!
//! ```text
//! # comment
//! scenario = binary
//! d = 4
//! n = 50
//! lambda_grid = 0, 2^-9, 1, inf
//! estimators = cv, mean, lambda=0
//! ```

use std::path::Path;

use super::{EstimatorKind, HarnessError, Scenario, ScenarioConfig};
use crate::estimator::parse_lambda_list;

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{key} = {value}: {why}"))
}

impl ScenarioConfig {
    /// Set one field from its textual form. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let v = value.trim();
        macro_rules! num {
            () => {
                v.parse().map_err(|e| bad(key, v, e))?
            };
        }
        match key.trim() {
            "scenario" => {
                // Switching scenario keeps explicit sizes but picks up the
                // scenario's default estimators.
                let s: Scenario = v.parse()?;
                self.scenario = s;
                self.estimators = ScenarioConfig::defaults(s).estimators;
            }
            "d" => self.d = num!(),
            "n" => self.n = num!(),
            "sigma" => self.sigma = num!(),
            "eta" => self.eta = num!(),
            "runs" => self.runs = num!(),
            "seed" => self.seed = num!(),
            "extensions" => self.extensions = num!(),
            "groups" => self.groups = num!(),
            "fraction" => self.fraction = num!(),
            "lambda_grid" => self.lambda_grid = parse_lambda_list(v).map_err(|e| bad(key, v, e))?,
            "estimators" => {
                self.estimators = v
                    .split(',')
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(str::parse)
                    .collect::<Result<Vec<EstimatorKind>, _>>()?
            }
            other => return Err(HarnessError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parse a config file. The `scenario` key, wherever it appears, picks
    /// the defaults the other keys override.
    pub fn parse_text(text: &str) -> Result<Self, HarnessError> {
        let mut pairs = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", no + 1)))?;
            // `estimators = lambda=0` splits on the first `=` only.
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let scenario = match pairs.iter().find(|(k, _)| k == "scenario") {
            Some((_, v)) => v.parse()?,
            None => return Err(HarnessError::Config("missing `scenario`".into())),
        };
        let mut cfg = ScenarioConfig::defaults(scenario);
        for (k, v) in pairs.iter().filter(|(k, _)| k != "scenario") {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| HarnessError::Io(e.to_string()))?;
        Self::parse_text(&text)
    }

    /// Render as a config file that parses back to the same value.
    pub fn to_text(&self) -> String {
        let grid: Vec<String> = self.lambda_grid.iter().map(ToString::to_string).collect();
        let est: Vec<String> = self.estimators.iter().map(ToString::to_string).collect();
        format!(
            "scenario = {}\nd = {}\nn = {}\nsigma = {}\neta = {}\nruns = {}\nseed = {}\nextensions = {}\ngroups = {}\nfraction = {}\nlambda_grid = {}\nestimators = {}\n",
            self.scenario,
            self.d,
            self.n,
            self.sigma,
            self.eta,
            self.runs,
            self.seed,
            self.extensions,
            self.groups,
            self.fraction,
            grid.join(", "),
            est.join(", "),
        )
    }
}
