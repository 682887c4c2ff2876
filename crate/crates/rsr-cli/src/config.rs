//! Run configuration: a JSON file whose values are overridden by flags.
//! The resolved configuration is written into every output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rsr_core::data::ColumnRoles;
use rsr_core::model::PriorConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Edge-list path, or one of `us48`, `slovenia`.
    pub graph: Option<String>,
    pub data: Option<PathBuf>,
    /// `sat` or `slovenia`: column roles and priors for the shipped schemas.
    pub preset: Option<String>,
    pub columns: Option<ColumnRoles>,
    pub model: Option<String>,
    pub q: Option<usize>,
    /// Inclusive range "a..b" of HH sizes.
    pub q_sweep: Option<String>,
    pub family: Option<String>,
    pub iters: Option<usize>,
    pub burnin: Option<usize>,
    pub alpha: Option<f64>,
    pub priors: Option<PriorConfig>,
    pub save_chain: Option<bool>,
    pub study: Option<String>,
    pub small_effect: Option<bool>,
    pub replicates: Option<usize>,
    pub paper_scale: Option<bool>,
    pub instances: Option<usize>,
    pub rotations: Option<usize>,
    pub lemma_instances: Option<usize>,
    pub lemma_grid: Option<usize>,
    pub tail_instances: Option<usize>,
    pub order: Option<String>,
    pub chain: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Values set in `flags` win.
    pub fn overlay(mut self, flags: &RunConfig) -> Self {
        overlay!(self, flags; command, seed, out, graph, data, preset, columns, model, q, q_sweep, family,
            iters, burnin, alpha, priors, save_chain, study, small_effect, replicates, paper_scale, instances, rotations,
            lemma_instances, lemma_grid, tail_instances, order, chain);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }
}

/// "3..45", "3-45" or a single "7".
pub fn parse_range(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("cannot parse range '{s}', expected a..b"));
    let (a, b) = match s.split_once("..").or_else(|| s.split_once('-')) {
        Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
        None => (s.trim(), s.trim()),
    };
    let a: usize = a.parse().map_err(|_| bad())?;
    let b: usize = b.parse().map_err(|_| bad())?;
    if a == 0 || b < a {
        return Err(bad());
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig {
            seed: Some(1),
            iters: Some(500),
            ..Default::default()
        };
        let flags = RunConfig {
            seed: Some(2),
            ..Default::default()
        };
        let c = file.overlay(&flags);
        assert_eq!(c.seed, Some(2));
        assert_eq!(c.iters, Some(500));
        let back: RunConfig = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..45").unwrap(), (1, 45));
        assert_eq!(parse_range("2-4").unwrap(), (2, 4));
        assert_eq!(parse_range("7").unwrap(), (7, 7));
        assert!(parse_range("5..2").is_err());
        assert!(parse_range("x").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>("{\"sede\": 3}").is_err());
    }
}
