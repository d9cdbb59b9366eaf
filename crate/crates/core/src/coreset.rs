//! Coreset sampling and quality measurement.
//!
//! A coreset is `m` i.i.d. categorical draws over the rows (with
//! replacement), row `i` drawn with probability `p_i/m` and carrying weight
//! `1/p_i`. This makes the weighted loss an unbiased estimator of the full
//! loss at every parameter vector. Repeated indices are kept as separate
//! draws; merging duplicates is a serialization option, never the default.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::LabeledMatrix;
use crate::error::{Error, Result};
use crate::losses::{total_loss, weighted_loss, NiceHinge, Regularizer};
use crate::rng::SplitMix64;
use crate::weights::{WeightKind, WeightVector};

/// Sampled row indices with positive importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Coreset {
    indices: Vec<usize>,
    weights: Vec<f64>,
    source_kind: WeightKind,
    seed: u64,
}

impl Coreset {
    pub fn new(indices: Vec<usize>, weights: Vec<f64>, source_kind: WeightKind, seed: u64) -> Self {
        assert_eq!(indices.len(), weights.len());
        assert!(!indices.is_empty(), "coreset must have at least one draw");
        assert!(weights.iter().all(|&w| w > 0.0), "weights must be positive");
        Self {
            indices,
            weights,
            source_kind,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn source_kind(&self) -> WeightKind {
        self.source_kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Output-format option: collapses repeated draws of the same row into a
    /// single entry with summed weight, sorted by index. Weighted losses are
    /// unchanged; the per-draw structure is lost.
    pub fn merged(&self) -> Coreset {
        let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            *acc.entry(i).or_insert(0.0) += w;
        }
        let (indices, weights) = acc.into_iter().unzip();
        Coreset {
            indices,
            weights,
            source_kind: self.source_kind,
            seed: self.seed,
        }
    }
}

/// Draws `m` rows i.i.d. with replacement from a sampling-probability vector
/// (row `i` with probability `p_i/m`, weight `1/p_i`). Deterministic given
/// the seed.
pub fn draw_coreset(p: &WeightVector, m: usize, seed: u64) -> Result<Coreset> {
    assert!(m >= 1, "need at least one draw");
    let n = p.len();
    let sum = p.sum();
    let mf = m as f64;
    if !(sum.is_finite() && (sum - mf).abs() <= 1e-6 * mf) {
        return Err(Error::InvalidConfig(format!(
            "sampling probabilities sum to {sum}, expected {m}"
        )));
    }
    if p.values.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidConfig("negative sampling probability".into()));
    }
    if sum <= 0.0 {
        return Err(Error::ZeroMass);
    }

    // cumulative distribution over rows
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for &v in &p.values {
        acc += v / sum;
        cdf.push(acc);
    }
    *cdf.last_mut().unwrap() = 1.0;

    let mut rng = SplitMix64::new(seed);
    let mut indices = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for _ in 0..m {
        let u = rng.next_f64();
        // first index with cdf > u; zero-probability rows have zero-width
        // intervals and are never selected
        let idx = match cdf.binary_search_by(|c| {
            if *c > u {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Less
            }
        }) {
            Ok(i) | Err(i) => i.min(n - 1),
        };
        indices.push(idx);
        weights.push(1.0 / p.values[idx]);
    }
    Ok(Coreset::new(indices, weights, p.kind, seed))
}

/// Coreset approximation quality over a family of parameter vectors:
/// the worst additive error, the worst error relative to the full loss, and
/// per-vector errors normalized by `‖Zβ‖₁ + n`. The regularizer is excluded
/// on both sides so the numbers measure the sampled sum itself.
#[derive(Debug, Clone)]
pub struct CoresetQuality {
    pub max_additive: f64,
    pub max_relative: f64,
    pub normalized_additive: Vec<f64>,
}

pub fn coreset_error(
    coreset: &Coreset,
    z: &LabeledMatrix,
    f: &NiceHinge,
    betas: &[Vec<f64>],
) -> Result<CoresetQuality> {
    assert!(!betas.is_empty(), "need at least one parameter vector");
    let reg = Regularizer::none();
    let n = z.n() as f64;
    let mut max_additive = 0.0_f64;
    let mut max_relative = 0.0_f64;
    let mut normalized = Vec::with_capacity(betas.len());
    for beta in betas {
        let full = total_loss(z, beta, f, &reg)?;
        let sampled = weighted_loss(coreset, z, beta, f, &reg)?;
        let delta = (sampled - full).abs();
        max_additive = max_additive.max(delta);
        if full > 0.0 {
            max_relative = max_relative.max(delta / full);
        } else if delta > 0.0 {
            max_relative = f64::INFINITY;
        }
        let l1: f64 = z
            .matrix()
            .matvec(beta)
            .iter()
            .map(|v| v.abs())
            .sum();
        normalized.push(delta / (l1 + n));
    }
    Ok(CoresetQuality {
        max_additive,
        max_relative,
        normalized_additive: normalized,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CoresetHeader {
    source_kind: WeightKind,
    seed: u64,
    m: usize,
    n: usize,
    d: usize,
}

/// Writes a coreset as CSV with a JSON header line:
/// `# {json}` then `index,weight` rows. Byte-deterministic.
pub fn write_coreset(
    coreset: &Coreset,
    n: usize,
    d: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    let header = CoresetHeader {
        source_kind: coreset.source_kind,
        seed: coreset.seed,
        m: coreset.len(),
        n,
        d,
    };
    let mut out = format!("# {}\n", serde_json::to_string(&header)?);
    out.push_str("index,weight\n");
    for (i, w) in coreset.indices.iter().zip(&coreset.weights) {
        out.push_str(&format!("{i},{w}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a coreset written by [`write_coreset`]. Returns the coreset and the
/// `(n, d)` recorded in the header.
pub fn read_coreset(path: impl AsRef<Path>) -> Result<(Coreset, usize, usize)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header_line = lines.next().ok_or(Error::ParseError {
        line: 0,
        msg: "empty coreset file".into(),
    })?;
    let json = header_line
        .strip_prefix("# ")
        .ok_or(Error::ParseError {
            line: 1,
            msg: "missing JSON header".into(),
        })?;
    let header: CoresetHeader = serde_json::from_str(json)?;
    let columns = lines.next().ok_or(Error::ParseError {
        line: 2,
        msg: "missing column header".into(),
    })?;
    if columns != "index,weight" {
        return Err(Error::ParseError {
            line: 2,
            msg: format!("unexpected columns {columns:?}"),
        });
    }
    let mut indices = Vec::new();
    let mut weights = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (i_s, w_s) = line.split_once(',').ok_or_else(|| Error::ParseError {
            line: k + 3,
            msg: "expected index,weight".into(),
        })?;
        indices.push(i_s.parse().map_err(|_| Error::ParseError {
            line: k + 3,
            msg: format!("bad index {i_s:?}"),
        })?);
        weights.push(w_s.parse().map_err(|_| Error::ParseError {
            line: k + 3,
            msg: format!("bad weight {w_s:?}"),
        })?);
    }
    Ok((
        Coreset::new(indices, weights, header.source_kind, header.seed),
        header.n,
        header.d,
    ))
}
