//! Requisite-variety audit: does the controller have a response for every disturbance?

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarietyTable {
    pub disturbances: Vec<String>,
    pub responses: Vec<String>,
    /// Disturbance -> responses that handle it.
    #[serde(default)]
    pub mapping: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarietyReport {
    pub stable: bool,
    /// Unmapped disturbances, sorted.
    pub uncovered: Vec<String>,
    pub margin: i64,
}

impl VarietyReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}, margin={}",
            if self.stable { "stable" } else { "unstable" },
            self.margin
        );
        if !self.uncovered.is_empty() {
            s.push_str(&format!(", uncovered=[{}]", self.uncovered.join(", ")));
        }
        s
    }
}

fn unique<'a>(what: &str, items: &'a [String]) -> Result<BTreeSet<&'a str>> {
    if items.is_empty() {
        return Err(Error::InvalidVarietyTable(format!("{what} must not be empty")));
    }
    let mut set = BTreeSet::new();
    for item in items {
        if !set.insert(item.as_str()) {
            return Err(Error::InvalidVarietyTable(format!("duplicate {what} entry '{item}'")));
        }
    }
    Ok(set)
}

/// Stable iff there are at least as many responses as disturbances and every
/// disturbance maps to at least one response.
pub fn variety_audit(table: &VarietyTable) -> Result<VarietyReport> {
    let disturbances = unique("disturbance", &table.disturbances)?;
    let responses = unique("response", &table.responses)?;
    for (key, values) in &table.mapping {
        if !disturbances.contains(key.as_str()) {
            return Err(Error::InvalidVarietyTable(format!(
                "mapping key '{key}' is not a disturbance"
            )));
        }
        for v in values {
            if !responses.contains(v.as_str()) {
                return Err(Error::InvalidVarietyTable(format!(
                    "mapping value '{v}' is not a response"
                )));
            }
        }
    }
    let uncovered: Vec<String> = disturbances
        .iter()
        .filter(|d| table.mapping.get(**d).is_none_or(|v| v.is_empty()))
        .map(|d| d.to_string())
        .collect();
    let margin = responses.len() as i64 - disturbances.len() as i64;
    Ok(VarietyReport {
        stable: margin >= 0 && uncovered.is_empty(),
        uncovered,
        margin,
    })
}

impl VarietyTable {
    pub fn from_toml(text: &str) -> Result<VarietyTable> {
        toml::from_str(text).map_err(|e| Error::InvalidVarietyTable(e.message().to_string()))
    }

    /// Threats and layered responses of a naval air-defence system.
    pub fn aegis() -> VarietyTable {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let responses = s(&["SM-2-Block-IV", "SM-3", "decoy", "EW", "crew-override"]);
        let mapping = BTreeMap::from([
            ("ballistic".to_string(), s(&["SM-3", "crew-override"])),
            ("cruise".to_string(), s(&["SM-2-Block-IV", "decoy", "EW"])),
            ("aircraft".to_string(), s(&["SM-2-Block-IV", "EW", "crew-override"])),
        ]);
        VarietyTable {
            disturbances: s(&["ballistic", "cruise", "aircraft"]),
            responses,
            mapping,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(d: &[&str], r: &[&str], m: &[(&str, &[&str])]) -> VarietyTable {
        VarietyTable {
            disturbances: d.iter().map(|x| x.to_string()).collect(),
            responses: r.iter().map(|x| x.to_string()).collect(),
            mapping: m
                .iter()
                .map(|(k, v)| (k.to_string(), v.iter().map(|x| x.to_string()).collect()))
                .collect(),
        }
    }

    #[test]
    fn aegis_is_stable_with_margin_two() {
        let r = variety_audit(&VarietyTable::aegis()).unwrap();
        assert!(r.stable);
        assert_eq!(r.margin, 2);
        assert!(r.uncovered.is_empty());
        assert_eq!(r.summary(), "stable, margin=2");
    }

    #[test]
    fn deficit_is_unstable() {
        let t = table(
            &["a", "b", "c", "d"],
            &["x", "y"],
            &[("a", &["x"]), ("b", &["y"]), ("c", &["x"]), ("d", &["y"])],
        );
        let r = variety_audit(&t).unwrap();
        assert!(!r.stable);
        assert_eq!(r.margin, -2);
    }

    #[test]
    fn unmapped_disturbance_is_uncovered() {
        let t = table(
            &["a", "b", "c"],
            &["x", "y", "z"],
            &[("a", &["x"]), ("c", &["z"]), ("b", &[])],
        );
        let r = variety_audit(&t).unwrap();
        assert!(!r.stable);
        assert_eq!(r.uncovered, vec!["b".to_string()]);
        assert_eq!(r.margin, 0);
    }

    #[test]
    fn equal_counts_are_enough() {
        let t = table(&["a"], &["x"], &[("a", &["x"])]);
        assert!(variety_audit(&t).unwrap().stable);
    }

    #[test]
    fn malformed_tables_rejected() {
        assert!(variety_audit(&table(&["a", "a"], &["x"], &[])).is_err());
        assert!(variety_audit(&table(&["a"], &["x", "x"], &[])).is_err());
        assert!(variety_audit(&table(&[], &["x"], &[])).is_err());
        assert!(variety_audit(&table(&["a"], &[], &[])).is_err());
        assert!(variety_audit(&table(&["a"], &["x"], &[("b", &["x"])])).is_err());
        assert!(variety_audit(&table(&["a"], &["x"], &[("a", &["q"])])).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let t = VarietyTable::aegis();
        let text = toml::to_string(&t).unwrap();
        assert_eq!(VarietyTable::from_toml(&text).unwrap(), t);
        assert!(VarietyTable::from_toml("disturbances=[\"a\"]\nresponses=[\"x\"]\nbogus=1").is_err());
    }
}
