//! Scenario files: a [`LinkConfig`] as flat JSON plus an optional
//! `"output"` section controlling what gets written to disk.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::LinkConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputOptions {
    /// Relative paths are resolved against the CLI `--out` directory.
    pub dir: Option<PathBuf>,
    /// Dump transmitter and beamformer waveforms.
    pub waveforms: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub link: LinkConfig,
    pub output: OutputOptions,
}

impl Scenario {
    pub fn from_value(mut value: Value) -> Result<Scenario> {
        let map = value
            .as_object_mut()
            .ok_or_else(|| Error::Parse("scenario must be a JSON object".into()))?;
        let output = match map.remove("output") {
            Some(v) => serde_json::from_value(v)?,
            None => OutputOptions::default(),
        };
        let link: LinkConfig = serde_json::from_value(value)?;
        Ok(Scenario { link, output })
    }

    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Scenario> {
        let s = Scenario::parse(text)?;
        s.validate()?;
        Ok(s)
    }

    /// Parses without validating values, so overrides can be applied first.
    pub fn parse(text: &str) -> Result<Scenario> {
        Scenario::from_value(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        Scenario::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if let Some(dir) = &self.output.dir {
            if dir.is_absolute()
                || dir.components().any(|c| {
                    !matches!(
                        c,
                        std::path::Component::Normal(_) | std::path::Component::CurDir
                    )
                })
            {
                return Err(Error::config(
                    "output.dir",
                    "must be a relative path inside the output directory",
                ));
            }
        }
        Ok(())
    }

    /// Fully expanded JSON, defaults included.
    pub fn to_value(&self) -> Result<Value> {
        let mut v = serde_json::to_value(&self.link)?;
        if let Value::Object(map) = &mut v {
            map.insert("output".into(), serde_json::to_value(&self.output)?);
        }
        Ok(v)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_stable_json(&self.to_value()?)
    }
}
