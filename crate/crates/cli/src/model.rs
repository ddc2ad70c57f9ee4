//! JSON model files: a chain, named observables, potentials, boundary sets
//! and initial laws.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ergo_core::{Distribution, Observable, StochasticChain};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub observables: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub potentials: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub boundaries: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub initial_laws: BTreeMap<String, Vec<f64>>,
}

/// A validated model with its chain built.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub file: ModelFile,
    pub chain: StochasticChain,
}

pub fn parse_model(path: &Path) -> Result<Model, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_model_str(&text)
}

pub fn parse_model_str(text: &str) -> Result<Model, CliError> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| CliError::Parse { line: e.line(), message: e.to_string() })?;
    validate(file)
}

/// Pretty-printed JSON that [`parse_model_str`] reads back unchanged.
pub fn emit(file: &ModelFile) -> String {
    serde_json::to_string_pretty(file).expect("model files always serialize")
}

fn validate(file: ModelFile) -> Result<Model, CliError> {
    let n = file.states.len();
    let unique: BTreeSet<&String> = file.states.iter().collect();
    if unique.len() != n {
        return Err(CliError::Validation("state labels must be unique".into()));
    }
    if file.matrix.len() != n {
        return Err(CliError::Validation(format!(
            "matrix has {} rows for {n} states",
            file.matrix.len()
        )));
    }
    let chain = StochasticChain::new(&file.matrix, file.states.clone())
        .map_err(|e| CliError::Validation(e.to_string()))?;
    for (kind, map) in [("observable", &file.observables), ("potential", &file.potentials)] {
        for (name, values) in map {
            Observable::new(values.clone())
                .map_err(|e| CliError::Validation(format!("{kind} {name}: {e}")))?;
            if values.len() != n {
                return Err(CliError::Validation(format!(
                    "{kind} {name} has {} values for {n} states",
                    values.len()
                )));
            }
        }
    }
    for (name, weights) in &file.initial_laws {
        let law = Distribution::new(weights.clone())
            .map_err(|e| CliError::Validation(format!("initial law {name}: {e}")))?;
        if law.len() != n {
            return Err(CliError::Validation(format!("initial law {name} has wrong length")));
        }
    }
    for labels in file.boundaries.values() {
        for label in labels {
            if chain.index_of(label).is_none() {
                return Err(CliError::UnknownReference(label.clone()));
            }
        }
    }
    Ok(Model { file, chain })
}

impl Model {
    pub fn state(&self, label: &str) -> Result<usize, CliError> {
        self.chain
            .index_of(label)
            .ok_or_else(|| CliError::UnknownReference(label.to_string()))
    }

    pub fn observable(&self, name: &str) -> Result<Observable, CliError> {
        let v = self
            .file
            .observables
            .get(name)
            .ok_or_else(|| CliError::UnknownReference(name.to_string()))?;
        Ok(Observable::new(v.clone())?)
    }

    pub fn potential(&self, name: &str) -> Result<Observable, CliError> {
        let v = self
            .file
            .potentials
            .get(name)
            .ok_or_else(|| CliError::UnknownReference(name.to_string()))?;
        Ok(Observable::new(v.clone())?)
    }

    pub fn boundary(&self, name: &str) -> Result<Vec<usize>, CliError> {
        let labels = self
            .file
            .boundaries
            .get(name)
            .ok_or_else(|| CliError::UnknownReference(name.to_string()))?;
        labels.iter().map(|l| self.state(l)).collect()
    }

    /// A named initial law, or the point mass at a state label.
    pub fn law(&self, name: &str) -> Result<Distribution, CliError> {
        if let Some(w) = self.file.initial_laws.get(name) {
            return Ok(Distribution::new(w.clone())?);
        }
        if let Some(i) = self.chain.index_of(name) {
            return Ok(Distribution::point(self.chain.len(), i));
        }
        Err(CliError::UnknownReference(name.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P2: &str = r#"{
  "states": ["1", "2"],
  "matrix": [[0.9, 0.1], [0.2, 0.8]],
  "observables": {"f": [1.0, -2.0]},
  "boundaries": {"right": ["2"]}
}"#;

    #[test]
    fn minimal_model_parses() {
        let m = parse_model_str(P2).unwrap();
        assert_eq!(m.chain.len(), 2);
        assert_eq!(m.boundary("right").unwrap(), vec![1]);
        assert_eq!(m.law("2").unwrap(), Distribution::point(2, 1));
        assert!(matches!(m.observable("g"), Err(CliError::UnknownReference(_))));
    }

    #[test]
    fn bad_row_sum_is_a_validation_error() {
        let text = P2.replace("[0.9, 0.1]", "[1.0, 0.1]");
        assert!(matches!(parse_model_str(&text), Err(CliError::Validation(_))));
    }

    #[test]
    fn unknown_boundary_label() {
        let text = P2.replace(r#"["2"]"#, r#"["3"]"#);
        assert!(matches!(parse_model_str(&text), Err(CliError::UnknownReference(name)) if name == "3"));
    }

    #[test]
    fn syntax_errors_carry_the_line() {
        let text = P2.replace("[0.2, 0.8]", "[0.2, 0.8");
        match parse_model_str(&text) {
            Err(CliError::Parse { line, .. }) => assert!(line >= 3),
            other => panic!("{other:?}"),
        }
    }
}
