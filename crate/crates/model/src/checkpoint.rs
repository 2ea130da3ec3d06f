//! Checkpoint directory layout:
//!
//! ```text
//! <dir>/
//!   config.json    — the full training configuration
//!   manifest.txt   — header (version, step, optimizer step, tensor count)
//!                    followed by one `name frozen rank dims…` line per tensor
//!   tensors.bin    — concatenated LMT1 blobs, in manifest order
//! ```
//!
//! Optimizer state is stored as extra tensors named `adam.m.<param>` and
//! `adam.v.<param>`, appended after the model tensors. Every load failure —
//! missing files, bad magic, name or shape mismatches — is reported as a
//! checkpoint error so callers can map the whole class to one exit code.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use latentmotion_tensor::format::{read_tensor, write_tensor};
use latentmotion_tensor::Tensor;

use crate::config::TrainConfig;
use crate::error::{ModelError, Result};
use crate::optim::Adam;
use crate::params::ModelParams;

const MANIFEST_VERSION: &str = "latentmotion-checkpoint v1";

/// Optimizer state recovered from disk: the step counter plus per-parameter
/// first/second moment tensors, in trainable order.
pub struct AdamState {
    pub t: u64,
    pub moments: Vec<(Tensor, Tensor)>,
}

/// Everything a resumed run needs.
pub struct Checkpoint {
    pub config: TrainConfig,
    pub params: ModelParams,
    pub adam: Option<AdamState>,
    pub step: u64,
}

fn ck<T, E: std::fmt::Display>(r: std::result::Result<T, E>, what: &str) -> Result<T> {
    r.map_err(|e| ModelError::Checkpoint(format!("{what}: {e}")))
}

/// Write a complete checkpoint for `params` at training step `step`.
pub fn save_checkpoint(
    dir: &Path,
    cfg: &TrainConfig,
    params: &ModelParams,
    adam: Option<&Adam>,
    step: u64,
) -> Result<()> {
    ck(fs::create_dir_all(dir), "create checkpoint dir")?;
    let json = ck(serde_json::to_string_pretty(cfg), "encode config")?;
    ck(fs::write(dir.join("config.json"), json), "write config.json")?;

    let mut entries: Vec<(String, Tensor, bool)> = params.named_tensors();
    let adam_t = match adam {
        Some(opt) => {
            let trainable_names: Vec<String> = entries
                .iter()
                .filter(|(_, _, frozen)| !frozen)
                .map(|(name, _, _)| name.clone())
                .collect();
            let moments = opt.state(&params.trainable())?;
            for (name, (m, v)) in trainable_names.into_iter().zip(moments) {
                entries.push((format!("adam.m.{name}"), m, true));
                entries.push((format!("adam.v.{name}"), v, true));
            }
            opt.t
        }
        None => 0,
    };

    let mut manifest = String::new();
    manifest.push_str(MANIFEST_VERSION);
    manifest.push('\n');
    manifest.push_str(&format!("step {step}\n"));
    manifest.push_str(&format!("adam_t {adam_t}\n"));
    manifest.push_str(&format!("tensors {}\n", entries.len()));
    for (name, t, frozen) in &entries {
        manifest.push_str(&format!("{name} {}", u8::from(*frozen)));
        manifest.push_str(&format!(" {}", t.rank()));
        for d in t.shape() {
            manifest.push_str(&format!(" {d}"));
        }
        manifest.push('\n');
    }
    ck(fs::write(dir.join("manifest.txt"), manifest), "write manifest.txt")?;

    let file = ck(File::create(dir.join("tensors.bin")), "create tensors.bin")?;
    let mut w = BufWriter::new(file);
    for (name, t, _) in &entries {
        ck(write_tensor(&mut w, t), &format!("write tensor {name}"))?;
    }
    ck(w.flush(), "flush tensors.bin")?;
    Ok(())
}

/// Parsed manifest: step, optimizer step, ordered tensor names.
struct Manifest {
    step: u64,
    adam_t: u64,
    names: Vec<String>,
}

fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != MANIFEST_VERSION {
        return Err(ModelError::Checkpoint(format!(
            "manifest header {header:?}, expected {MANIFEST_VERSION:?}"
        )));
    }
    let mut field = |key: &str| -> Result<u64> {
        let line = lines.next().unwrap_or_default();
        match line.strip_prefix(key).map(str::trim) {
            Some(v) => ck(v.parse::<u64>(), &format!("manifest field {key}")),
            None => Err(ModelError::Checkpoint(format!(
                "manifest line {line:?}, expected `{key} <n>`"
            ))),
        }
    };
    let step = field("step ")?;
    let adam_t = field("adam_t ")?;
    let count = field("tensors ")? as usize;
    let mut names = Vec::with_capacity(count);
    for line in lines {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(name) => names.push(name.to_string()),
            None => continue, // tolerate a trailing blank line
        }
    }
    if names.len() != count {
        return Err(ModelError::Checkpoint(format!(
            "manifest lists {} tensors but declares {count}",
            names.len()
        )));
    }
    Ok(Manifest { step, adam_t, names })
}

/// Load a checkpoint directory, rebuilding the parameter set from its stored
/// configuration and overwriting every tensor with the stored values.
pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let json = ck(fs::read_to_string(dir.join("config.json")), "read config.json")?;
    let cfg: TrainConfig = ck(serde_json::from_str(&json), "parse config.json")?;
    ck(cfg.validate(), "stored config")?;

    let manifest_text = ck(fs::read_to_string(dir.join("manifest.txt")), "read manifest.txt")?;
    let manifest = parse_manifest(&manifest_text)?;

    let params = ModelParams::init(&cfg)?;
    let named = params.named_tensors();
    let by_name: HashMap<&str, &Tensor> = named.iter().map(|(n, t, _)| (n.as_str(), t)).collect();
    let trainable_names: Vec<&str> = named
        .iter()
        .filter(|(_, _, frozen)| !frozen)
        .map(|(n, _, _)| n.as_str())
        .collect();

    let file = ck(File::open(dir.join("tensors.bin")), "open tensors.bin")?;
    let mut r = BufReader::new(file);
    let mut adam_m: HashMap<String, Tensor> = HashMap::new();
    let mut adam_v: HashMap<String, Tensor> = HashMap::new();
    for name in &manifest.names {
        let t = ck(read_tensor(&mut r), &format!("read tensor {name}"))?;
        if let Some(param) = name.strip_prefix("adam.m.") {
            adam_m.insert(param.to_string(), t);
        } else if let Some(param) = name.strip_prefix("adam.v.") {
            adam_v.insert(param.to_string(), t);
        } else {
            let dest = by_name.get(name.as_str()).ok_or_else(|| {
                ModelError::Checkpoint(format!("unknown tensor {name} in checkpoint"))
            })?;
            if dest.shape() != t.shape() {
                return Err(ModelError::Checkpoint(format!(
                    "tensor {name}: stored shape {:?} does not match model shape {:?}",
                    t.shape(),
                    dest.shape()
                )));
            }
            dest.set_data(&t.data())?;
        }
    }
    let mut trailing = [0u8; 1];
    if ck(r.read(&mut trailing), "check tensors.bin end")? != 0 {
        return Err(ModelError::Checkpoint(
            "tensors.bin has trailing data beyond the manifest listing".into(),
        ));
    }

    let adam = if adam_m.is_empty() && adam_v.is_empty() {
        None
    } else {
        let mut moments = Vec::with_capacity(trainable_names.len());
        for name in &trainable_names {
            let m = adam_m.remove(*name).ok_or_else(|| {
                ModelError::Checkpoint(format!("optimizer state missing adam.m.{name}"))
            })?;
            let v = adam_v.remove(*name).ok_or_else(|| {
                ModelError::Checkpoint(format!("optimizer state missing adam.v.{name}"))
            })?;
            moments.push((m, v));
        }
        Some(AdamState { t: manifest.adam_t, moments })
    };

    Ok(Checkpoint { config: cfg, params, adam, step: manifest.step })
}
