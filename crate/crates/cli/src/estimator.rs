//! Parallel Monte Carlo estimation with a persistent reference cache.
//!
//! Samples are drawn from per-index streams and reduced in index order, so
//! results do not depend on the number of threads.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use retrodict_core::measures::{
    self, canonical_erasure_classical, canonical_erasure_quantum, Domain, IntegrationConfig, MeasureEstimate,
    MeasureKind, ReferenceCache, Target,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn par_estimate_raw(target: Target<'_>, kind: MeasureKind, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
    cfg.validate()?;
    let samples = (0..cfg.npairs as u64)
        .into_par_iter()
        .map(|i| measures::sample_integrand(target, kind, cfg, i))
        .collect::<retrodict_core::Result<Vec<_>>>()?;
    Ok(measures::reduce(&samples, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct CachedValue {
    value: f64,
    stderr: f64,
    nsamples: usize,
}

#[derive(Debug, Default)]
pub struct Estimator {
    cache: ReferenceCache,
    path: Option<PathBuf>,
}

impl Estimator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads references from `path` if it exists; [`save`](Self::save) writes them back.
    pub fn with_cache_file(path: &Path) -> Result<Self> {
        let mut est = Estimator { cache: ReferenceCache::new(), path: Some(path.to_path_buf()) };
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let entries: BTreeMap<String, CachedValue> =
                serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))?;
            for (key, v) in entries {
                let seed = key
                    .split(':')
                    .find_map(|p| p.strip_prefix("seed"))
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(0);
                est.cache.insert(
                    key,
                    MeasureEstimate { value: v.value, stderr: v.stderr, nsamples: v.nsamples, seed, normalized: false, rejected: 0 },
                );
            }
        }
        Ok(est)
    }

    pub fn save(&self) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let entries: BTreeMap<&String, CachedValue> = self
            .cache
            .entries()
            .iter()
            .map(|(k, e)| (k, CachedValue { value: e.value, stderr: e.stderr, nsamples: e.nsamples }))
            .collect();
        let mut text = serde_json::to_string_pretty(&entries).expect("cache serializes");
        text.push('\n');
        crate::format::write_text(path, &text)
    }

    pub fn reference(&mut self, dim: usize, domain: Domain, kind: MeasureKind, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
        let cfg = IntegrationConfig { normalize: false, ..*cfg };
        let key = ReferenceCache::key(dim, domain, kind, &cfg);
        if let Some(e) = self.cache.entries().get(&key) {
            return Ok(*e);
        }
        let e = match domain {
            Domain::Classical => par_estimate_raw(Target::Classical(&canonical_erasure_classical(dim)), kind, &cfg)?,
            Domain::Quantum => par_estimate_raw(Target::Quantum(&canonical_erasure_quantum(dim)), kind, &cfg)?,
        };
        self.cache.insert(key, e);
        Ok(e)
    }

    /// Raw or normalized estimate depending on `cfg.normalize`.
    pub fn estimate(&mut self, target: Target<'_>, kind: MeasureKind, cfg: &IntegrationConfig) -> Result<MeasureEstimate> {
        let raw = par_estimate_raw(target, kind, cfg)?;
        if !cfg.normalize {
            return Ok(raw);
        }
        let reference = self.reference(target.dim(), target.domain(), kind, cfg)?;
        Ok(measures::normalize(&raw, &reference))
    }

    /// Normalizes many raw estimates computed in parallel across targets.
    pub fn estimate_many(
        &mut self,
        targets: &[Target<'_>],
        kind: MeasureKind,
        cfg: &IntegrationConfig,
    ) -> Result<Vec<MeasureEstimate>> {
        if cfg.normalize {
            let mut dims: Vec<(usize, Domain)> = targets.iter().map(|t| (t.dim(), t.domain())).collect();
            dims.sort_by_key(|&(d, dom)| (d, dom == Domain::Quantum));
            dims.dedup();
            for (d, dom) in dims {
                self.reference(d, dom, kind, cfg)?;
            }
        }
        let raws = targets
            .par_iter()
            .map(|t| measures::estimate_raw(*t, kind, cfg))
            .collect::<retrodict_core::Result<Vec<_>>>()?;
        if !cfg.normalize {
            return Ok(raws);
        }
        raws.iter()
            .zip(targets)
            .map(|(raw, t)| Ok(measures::normalize(raw, &self.reference(t.dim(), t.domain(), kind, cfg)?)))
            .collect()
    }
}
