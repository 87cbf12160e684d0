//! Flat `key = value` run configuration files.
//!
//! ```
//! use graph_jepa::config::RunConfig;
//!
//! let cfg: RunConfig = "dataset = csl:41:2\nepochs = 5\nloss_kind = euclidean\n".parse().unwrap();
//! assert_eq!(cfg.train.epochs, 5);
//! assert_eq!(cfg.dataset.as_deref(), Some("csl:41:2"));
//! ```

use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::jepa::TrainConfig;

/// Training settings plus the dataset they apply to.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<String>,
    pub train: TrainConfig,
}

fn scalar(raw: &str) -> Value {
    let unquoted = raw.strip_prefix('"').and_then(|s| s.strip_suffix('"'));
    if let Some(s) = unquoted {
        return Value::String(s.to_string());
    }
    if let Ok(u) = raw.parse::<u64>() {
        return Value::from(u);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return Value::from(f);
    }
    match raw {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        _ => Value::String(raw.to_string()),
    }
}

impl RunConfig {
    pub fn parse_named(text: &str, source: &str) -> Result<Self> {
        let mut fields = Map::new();
        let mut dataset = None;
        for (i, line) in text.lines().enumerate() {
            let at = || format!("{source}:{}", i + 1);
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::parse(at(), "expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(Error::parse(at(), format!("missing value for '{key}'")));
            }
            let key = match key {
                "B" => "blocks",
                "L" => "gnn_layers",
                k => k,
            };
            if key == "dataset" {
                if dataset.replace(value.to_string()).is_some() {
                    return Err(Error::parse(at(), "duplicate key 'dataset'"));
                }
                continue;
            }
            if fields.insert(key.to_string(), scalar(value)).is_some() {
                return Err(Error::parse(at(), format!("duplicate key '{key}'")));
            }
        }
        let train: TrainConfig =
            serde_json::from_value(Value::Object(fields)).map_err(|e| Error::parse(source, e.to_string()))?;
        train.validate()?;
        Ok(Self { dataset, train })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_named(&text, &path.display().to_string())
    }

    /// Renders every field, one per line, in a form `parse` accepts.
    pub fn to_flat(&self) -> String {
        let mut out = String::new();
        if let Some(d) = &self.dataset {
            out.push_str(&format!("dataset = {d}\n"));
        }
        if let Ok(Value::Object(map)) = serde_json::to_value(&self.train) {
            for (k, v) in map {
                let text = match v {
                    Value::String(s) => s,
                    other => other.to_string(),
                };
                out.push_str(&format!("{k} = {text}\n"));
            }
        }
        out
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_named(s, "<config>")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jepa::{LossKind, TargetMode};
    use crate::partition::PartitionMethod;
    use crate::posenc::PeKind;

    #[test]
    fn every_field_round_trips() {
        let cfg = RunConfig {
            dataset: Some("data/MUTAG".into()),
            train: TrainConfig {
                lr: 1e-3,
                loss_kind: LossKind::Poincare,
                partition_method: PartitionMethod::Random,
                pe_kind: PeKind::RelativePatch,
                target_mode: TargetMode::Shared,
                seed: u64::MAX,
                ..TrainConfig::default()
            },
        };
        assert_eq!(cfg.to_flat().parse::<RunConfig>().unwrap(), cfg);
    }

    #[test]
    fn comments_aliases_and_defaults() {
        let cfg: RunConfig = "# header\nB = 2 # blocks\nL=3\n\n".parse().unwrap();
        assert_eq!((cfg.train.blocks, cfg.train.gnn_layers), (2, 3));
        assert_eq!(cfg.train.epochs, TrainConfig::default().epochs);
        assert_eq!(cfg.dataset, None);
    }

    #[test]
    fn bad_lines_report_location() {
        for text in ["epochs 5", "epochs =", "epochs = 1\nepochs = 2"] {
            match text.parse::<RunConfig>() {
                Err(Error::Parse { location, .. }) => assert!(location.starts_with("<config>:")),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!("colour = blue".parse::<RunConfig>(), Err(Error::Parse { .. })));
        assert!(matches!("m = 0".parse::<RunConfig>(), Err(Error::InvalidArgument(_))));
        assert!("loss_kind = cosine".parse::<RunConfig>().is_err());
    }
}
