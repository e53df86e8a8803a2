//! Tool configuration as JSON text.
//!
//! Every section is optional and falls back to its defaults; unknown keys at
//! any level are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::denoise::NoiseThresholds;
use crate::error::{Error, Result};
use crate::isms::EngineParams;
use crate::spectral::SpectralAxis;
use crate::stego::StegoParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub engine: EngineParams,
    pub mask_radius: f64,
    pub noise: NoiseThresholds,
    pub stego: StegoParams,
    pub axis: SpectralAxis,
}

impl Default for ToolConfig {
    fn default() -> Self {
        Self {
            engine: EngineParams::default(),
            mask_radius: 30.0,
            noise: NoiseThresholds::default(),
            stego: StegoParams::default(),
            axis: SpectralAxis::Magnitude,
        }
    }
}

impl ToolConfig {
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.engine.validate().map_err(wrap)?;
        self.noise.validate().map_err(wrap)?;
        self.stego.validate().map_err(wrap)?;
        if !(self.mask_radius >= 0.0) || !self.mask_radius.is_finite() {
            return Err(Error::Config(format!("mask_radius {} must be finite and >= 0", self.mask_radius)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        assert_eq!(ToolConfig::from_json("{}").unwrap(), ToolConfig::default());
    }

    #[test]
    fn partial_sections_fill_in() {
        let cfg = ToolConfig::from_json(r#"{"engine": {"rng_seed": 9}, "stego": {"beta": 0.1}}"#).unwrap();
        assert_eq!(cfg.engine.rng_seed, 9);
        assert_eq!(cfg.engine.k, EngineParams::default().k);
        assert_eq!(cfg.stego.alpha, 0.02);
        assert_eq!(cfg.stego.beta, 0.1);
    }

    #[test]
    fn round_trip() {
        let mut cfg = ToolConfig::default();
        cfg.axis = SpectralAxis::Phase;
        cfg.mask_radius = 12.5;
        assert_eq!(ToolConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        for bad in [
            r#"{"colour": 1}"#,
            r#"{"engine": {"kk": [1, 1, 1]}}"#,
            r#"{"noise": {"dev": 3}}"#,
            r#"{"engine": {"k": [2.0, 0.5, 2.0]}}"#,
            r#"{"stego": {"alpha": 0}}"#,
            r#"{"mask_radius": -1}"#,
            r#"{"axis": "angle"}"#,
            "[",
        ] {
            let e = ToolConfig::from_json(bad).unwrap_err();
            assert_eq!(e.code(), 30, "{bad}: {e}");
        }
    }
}
