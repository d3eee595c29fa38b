//! Checkpoints: one binary archive holding config + vocabulary + named
//! parameter tensors, with optional optimizer state for exact resumption.
//!
//! Layout (all integers little-endian u64 unless noted):
//!   magic "PRXCKPT1" | meta_len, meta JSON | tensor_count |
//!   per tensor: name_len, name, ndim, dims..., f64 data |
//!   u8 has_optimizer | optimizer scalars + sorted slots when present.
//!
//! Loading rejects vocabulary-hash mismatches and any missing, extra or
//! misshapen tensor. Serialization order is deterministic, so identical
//! training runs produce byte-identical files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ModelConfig, TrainConfig};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::ModelState;
use crate::nn::Adam;
use crate::training::Trainer;

const MAGIC: &[u8; 8] = b"PRXCKPT1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub model: ModelConfig,
    pub vocab_tokens: Vec<String>,
    pub vocab_hash: String,
    pub normalize_features: bool,
    /// Ablation variant name ("full", "no-ccl", ...).
    pub variant: String,
    pub train: Option<TrainState>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainState {
    pub cfg: TrainConfig,
    pub epochs_done: usize,
    pub global_step: usize,
    pub best_val_bleu: f64,
}

pub struct LoadedCheckpoint {
    pub model: ModelState,
    pub vocab: Vocabulary,
    pub meta: CheckpointMeta,
    pub optimizer: Option<Adam>,
}

fn w_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn r_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn w_bytes<W: Write>(w: &mut W, b: &[u8]) -> Result<()> {
    w_u64(w, b.len() as u64)?;
    w.write_all(b)?;
    Ok(())
}

fn r_bytes<R: Read>(r: &mut R) -> Result<Vec<u8>> {
    let len = r_u64(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn w_f64s<W: Write>(w: &mut W, vals: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(vals.len() * 8);
    for v in vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn r_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn save_checkpoint(
    path: &Path,
    model: &mut ModelState,
    meta: &CheckpointMeta,
    optimizer: Option<&Adam>,
) -> Result<()> {
    let vocab_hash = Vocabulary::from_tokens(meta.vocab_tokens.clone()).hash();
    if vocab_hash != meta.vocab_hash || vocab_hash != model.vocab_hash {
        return Err(Error::VocabMismatch(
            "checkpoint metadata does not match the model's vocabulary".to_string(),
        ));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w_bytes(&mut w, &serde_json::to_vec(meta)?)?;

    let mut tensors: Vec<(String, Vec<usize>, Vec<f64>)> = Vec::new();
    model.visit_params(&mut |name, shape, value, _| {
        tensors.push((name.to_string(), shape.to_vec(), value.to_vec()));
    });
    w_u64(&mut w, tensors.len() as u64)?;
    for (name, shape, data) in &tensors {
        w_bytes(&mut w, name.as_bytes())?;
        w_u64(&mut w, shape.len() as u64)?;
        for &d in shape {
            w_u64(&mut w, d as u64)?;
        }
        w_f64s(&mut w, data)?;
    }

    match optimizer {
        None => w.write_all(&[0u8])?,
        Some(opt) => {
            w.write_all(&[1u8])?;
            w_f64s(&mut w, &[opt.learning_rate, opt.beta1, opt.beta2, opt.eps])?;
            w_u64(&mut w, opt.step_count())?;
            let mut names: Vec<&String> = opt.slots.keys().collect();
            names.sort();
            w_u64(&mut w, names.len() as u64)?;
            for name in names {
                let slot = &opt.slots[name];
                w_bytes(&mut w, name.as_bytes())?;
                w_u64(&mut w, slot.m.len() as u64)?;
                w_f64s(&mut w, &slot.m)?;
                w_f64s(&mut w, &slot.v)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "{} is not a checkpoint (bad magic)",
            path.display()
        )));
    }
    let meta: CheckpointMeta = serde_json::from_slice(&r_bytes(&mut r)?)?;
    let vocab = Vocabulary::from_tokens(meta.vocab_tokens.clone());
    if vocab.hash() != meta.vocab_hash {
        return Err(Error::VocabMismatch(
            "stored vocabulary does not match its recorded hash".to_string(),
        ));
    }

    let tensor_count = r_u64(&mut r)? as usize;
    let mut tensors: HashMap<String, (Vec<usize>, Vec<f64>)> = HashMap::new();
    for _ in 0..tensor_count {
        let name = String::from_utf8(r_bytes(&mut r)?)
            .map_err(|e| Error::Checkpoint(format!("bad tensor name: {e}")))?;
        let ndim = r_u64(&mut r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r_u64(&mut r)? as usize);
        }
        let len: usize = shape.iter().product();
        let data = r_f64s(&mut r, len)?;
        tensors.insert(name, (shape, data));
    }

    let mut model = ModelState::with_hash(&meta.model, vocab.len(), meta.vocab_hash.clone(), 0);
    let mut missing = Vec::new();
    let mut mismatched = Vec::new();
    model.visit_params(&mut |name, shape, value, _| match tensors.remove(name) {
        Some((stored_shape, data)) => {
            if stored_shape != shape {
                mismatched.push(format!("{name}: {stored_shape:?} vs {shape:?}"));
            } else {
                value.copy_from_slice(&data);
            }
        }
        None => missing.push(name.to_string()),
    });
    if !missing.is_empty() || !mismatched.is_empty() || !tensors.is_empty() {
        let extra: Vec<String> = tensors.keys().cloned().collect();
        return Err(Error::Checkpoint(format!(
            "tensor table mismatch (missing: {missing:?}, misshapen: {mismatched:?}, extra: {extra:?})"
        )));
    }

    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let optimizer = if flag[0] == 1 {
        let scalars = r_f64s(&mut r, 4)?;
        let t = r_u64(&mut r)?;
        let slot_count = r_u64(&mut r)? as usize;
        let mut slots = HashMap::new();
        for _ in 0..slot_count {
            let name = String::from_utf8(r_bytes(&mut r)?)
                .map_err(|e| Error::Checkpoint(format!("bad slot name: {e}")))?;
            let len = r_u64(&mut r)? as usize;
            let m = r_f64s(&mut r, len)?;
            let v = r_f64s(&mut r, len)?;
            slots.insert(name, crate::nn::AdamSlot { m, v });
        }
        Some(Adam::from_parts(
            scalars[0], scalars[1], scalars[2], scalars[3], t, slots,
        ))
    } else {
        None
    };

    Ok(LoadedCheckpoint {
        model,
        vocab,
        meta,
        optimizer,
    })
}

/// Saves a trainer's full state (model + optimizer + counters) for resuming.
pub fn save_trainer(path: &Path, trainer: &mut Trainer, variant: &str) -> Result<()> {
    let meta = CheckpointMeta {
        model: trainer.cfg.model.clone(),
        vocab_tokens: trainer.vocab.tokens().to_vec(),
        vocab_hash: trainer.vocab.hash(),
        normalize_features: trainer.cfg.normalize_features,
        variant: variant.to_string(),
        train: Some(TrainState {
            cfg: trainer.cfg.clone(),
            epochs_done: trainer.epochs_done,
            global_step: trainer.global_step,
            best_val_bleu: trainer.best_val_bleu,
        }),
    };
    let opt = trainer.opt.clone();
    save_checkpoint(path, &mut trainer.model, &meta, Some(&opt))
}

/// Rebuilds a trainer from [`save_trainer`] output. The run log starts empty;
/// callers append to their existing log file.
pub fn resume_trainer(path: &Path) -> Result<Trainer> {
    let loaded = load_checkpoint(path)?;
    let train = loaded.meta.train.clone().ok_or_else(|| {
        Error::Checkpoint("checkpoint has no training state to resume".to_string())
    })?;
    let optimizer = loaded.optimizer.ok_or_else(|| {
        Error::Checkpoint("checkpoint has no optimizer state to resume".to_string())
    })?;
    Ok(Trainer::from_parts(
        train.cfg,
        loaded.vocab,
        loaded.model,
        optimizer,
        train.epochs_done,
        train.global_step,
        train.best_val_bleu,
        crate::training::RunLog::default(),
    ))
}

/// SHA-256 of a file, hex-encoded. Used for reproducibility checks.
pub fn file_sha256(path: &Path) -> Result<String> {
    let mut f = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 8192];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
