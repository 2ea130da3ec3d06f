//! Library half of the command-line tool: JSON config loading and the
//! self-check suite behind `latentmotion check`. Kept as a library so the
//! integration and acceptance tests can drive the same code paths the
//! binary uses.

pub mod checks;

use std::path::Path;

use latentmotion_model::{ModelError, Result, TrainConfig};

/// Read, parse, and validate a JSON training config.
///
/// Every failure — unreadable file, malformed JSON, unknown key, or a value
/// out of range — comes back as a config error naming the offending path,
/// which the binary maps to exit code 2.
pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: TrainConfig = serde_json::from_str(&text)
        .map_err(|e| ModelError::Config(format!("bad config {}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}
