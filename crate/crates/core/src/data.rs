//! Dataset ingestion, label fold-in, and instance generators.
//!
//! All loss evaluation in this crate works on label-premultiplied data: row
//! `i` of a [`LabeledMatrix`] is `y_i * x_i`, so the classification loss is
//! simply `Σ f((Zβ)_i)`. Loaders fold labels in at parse time; generators
//! produce folded data directly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::SplitMix64;

/// Label-premultiplied data matrix (`Z = D_y X`).
#[derive(Debug, Clone)]
pub struct LabeledMatrix {
    matrix: DenseMatrix,
    /// Original ±1 labels when known; folding is not invertible without them.
    labels: Option<Vec<f64>>,
    /// Where the data came from, for reports.
    provenance: String,
    /// True when every original row satisfies ‖x_i‖₂ ≤ 1.
    rows_norm_bounded: bool,
}

impl LabeledMatrix {
    pub fn new(matrix: DenseMatrix, labels: Option<Vec<f64>>, provenance: impl Into<String>) -> Self {
        if let Some(l) = &labels {
            assert_eq!(l.len(), matrix.rows());
        }
        Self {
            matrix,
            labels,
            provenance: provenance.into(),
            rows_norm_bounded: false,
        }
    }

    /// Folds explicit ±1 labels into a raw feature matrix.
    pub fn fold(x: &DenseMatrix, labels: &[f64], provenance: impl Into<String>) -> Self {
        assert_eq!(labels.len(), x.rows());
        let scales: Vec<f64> = labels.to_vec();
        Self {
            matrix: x.scale_rows(&scales),
            labels: Some(scales),
            provenance: provenance.into(),
            rows_norm_bounded: false,
        }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn d(&self) -> usize {
        self.matrix.cols()
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn rows_norm_bounded(&self) -> bool {
        self.rows_norm_bounded
    }
}

fn parse_label_values(raw: &[f64]) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = Vec::new();
    for &l in raw {
        if !distinct.contains(&l) {
            distinct.push(l);
        }
        if distinct.len() > 2 {
            return Err(Error::MoreThanTwoClasses);
        }
    }
    // Larger raw label maps to +1. A single-class file maps everything to +1
    // so that files written from already-folded data round-trip.
    let hi = distinct.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(raw
        .iter()
        .map(|&l| if distinct.len() == 1 || l == hi { 1.0 } else { -1.0 })
        .collect())
}

/// Reads a libsvm-format file (`label idx:val idx:val ...`, 1-based feature
/// indices) into a dense label-premultiplied matrix. Missing features are 0.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<LabeledMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut raw_labels: Vec<f64> = Vec::new();
    let mut sparse_rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let line_id = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label_tok = parts.next().ok_or_else(|| Error::ParseError {
            line: line_id,
            msg: "missing label".into(),
        })?;
        let label: f64 = label_tok.parse().map_err(|_| Error::ParseError {
            line: line_id,
            msg: format!("bad label {label_tok:?}"),
        })?;
        let mut row = Vec::new();
        for tok in parts {
            let (idx_s, val_s) = tok.split_once(':').ok_or_else(|| Error::ParseError {
                line: line_id,
                msg: format!("expected index:value, got {tok:?}"),
            })?;
            let idx: usize = idx_s.parse().map_err(|_| Error::ParseError {
                line: line_id,
                msg: format!("bad feature index {idx_s:?}"),
            })?;
            if idx == 0 {
                return Err(Error::ParseError {
                    line: line_id,
                    msg: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = val_s.parse().map_err(|_| Error::ParseError {
                line: line_id,
                msg: format!("bad feature value {val_s:?}"),
            })?;
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        raw_labels.push(label);
        sparse_rows.push(row);
    }

    if sparse_rows.is_empty() {
        return Err(Error::ParseError {
            line: 0,
            msg: "file contains no data rows".into(),
        });
    }
    if max_index == 0 {
        return Err(Error::ParseError {
            line: 0,
            msg: "no features present".into(),
        });
    }

    let labels = parse_label_values(&raw_labels)?;
    let n = sparse_rows.len();
    let d = max_index;
    let mut data = vec![0.0; n * d];
    for (i, row) in sparse_rows.iter().enumerate() {
        for &(j, v) in row {
            data[i * d + j] = v;
        }
    }
    let x = DenseMatrix::new(n, d, data);
    x.check_finite("libsvm data")?;
    Ok(LabeledMatrix::fold(
        &x,
        &labels,
        format!("libsvm:{}", path.display()),
    ))
}

/// Writes a labeled matrix in libsvm format. All `d` features are written
/// explicitly so the column count survives a round-trip. When the original
/// labels are unknown the rows are written as-is with label `+1` (folding by
/// `+1` is the identity).
pub fn write_libsvm(z: &LabeledMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for i in 0..z.n() {
        let label = z.labels().map_or(1.0, |l| l[i]);
        if label >= 0.0 {
            out.push_str("+1");
        } else {
            out.push_str("-1");
        }
        for (j, &v) in z.matrix().row(i).iter().enumerate() {
            // unfold: x_ij = y_i * z_ij
            let orig = label * v;
            let _ = write!(out, " {}:{}", j + 1, orig);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a headered CSV whose first column is the label.
pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let _header = lines.next().ok_or(Error::ParseError {
        line: 0,
        msg: "empty file".into(),
    })?;

    let mut raw_labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines {
        let line_id = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label_tok = fields.next().unwrap_or("");
        let label: f64 = label_tok.trim().parse().map_err(|_| Error::ParseError {
            line: line_id,
            msg: format!("bad label {label_tok:?}"),
        })?;
        let mut row = Vec::new();
        for tok in fields {
            let v: f64 = tok.trim().parse().map_err(|_| Error::ParseError {
                line: line_id,
                msg: format!("bad value {tok:?}"),
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::ParseError {
                    line: line_id,
                    msg: format!("expected {} features, got {}", first.len(), row.len()),
                });
            }
        }
        raw_labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::ParseError {
            line: 0,
            msg: "no data rows".into(),
        });
    }
    let labels = parse_label_values(&raw_labels)?;
    let x = DenseMatrix::from_rows(&rows);
    x.check_finite("csv data")?;
    Ok(LabeledMatrix::fold(
        &x,
        &labels,
        format!("csv:{}", path.display()),
    ))
}

/// Writes a labeled matrix as headered CSV, first column the label.
pub fn write_csv(z: &LabeledMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from("label");
    for j in 0..z.d() {
        let _ = write!(out, ",x{}", j + 1);
    }
    out.push('\n');
    for i in 0..z.n() {
        let label = z.labels().map_or(1.0, |l| l[i]);
        let _ = write!(out, "{}", if label >= 0.0 { 1 } else { -1 });
        for &v in z.matrix().row(i) {
            let _ = write!(out, ",{}", label * v);
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Synthetic classification data with a controllable row-importance profile.
///
/// Rows are standard Gaussian vectors multiplied by a per-row lognormal scale
/// `exp(skew * g_i)`; `skew = 0` gives i.i.d. Gaussian rows with near-uniform
/// Lewis weights, larger `skew` concentrates the ℓ1 mass on a few rows.
/// Labels come from a planted direction with 10% random flips and are folded
/// in. Fully determined by `seed`.
pub fn gen_synthetic(n: usize, d: usize, skew: f64, seed: u64) -> LabeledMatrix {
    assert!(n >= d && d >= 1, "need n >= d >= 1");
    assert!(skew >= 0.0, "skew must be nonnegative");
    let mut rng = SplitMix64::new(seed);
    let planted = rng.next_unit_vector(d);

    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let scale = if skew == 0.0 {
            1.0
        } else {
            (skew * rng.next_gaussian()).exp()
        };
        let row: Vec<f64> = (0..d).map(|_| scale * rng.next_gaussian()).collect();
        let margin: f64 = row.iter().zip(&planted).map(|(a, b)| a * b).sum();
        let mut label = if margin >= 0.0 { 1.0 } else { -1.0 };
        if rng.next_f64() < 0.10 {
            label = -label;
        }
        labels.push(label);
        rows.push(row);
    }
    let x = DenseMatrix::from_rows(&rows);
    LabeledMatrix::fold(
        &x,
        &labels,
        format!("synthetic:n={n},d={d},skew={skew},seed={seed}"),
    )
}

/// Hard instance for regularized classification, built from a bit string `a`
/// and a probe index `b`.
///
/// The base block has one row per bit of `a`: the ±1 binary code of the row
/// index when the bit is set (zeros otherwise), a constant `d` in the last
/// column, all scaled by `gamma = 1/sqrt(d² + d)` so coded rows have unit
/// norm. The full matrix stacks `copies` copies of the block. Evaluating the
/// hinge loss at [`IndexInstance::beta_probe`] with the `n^κ ‖β‖₂²`
/// regularizer yields exactly `2·n^κ·d(d+1)²` when `a(b) = 1` and
/// `n^κ·d(d+1)²` when `a(b) = 0`: membership of one bit moves the objective
/// by a clean factor of two.
#[derive(Debug, Clone)]
pub struct IndexInstance {
    pub a: Vec<bool>,
    /// 1-based probe index into `a`.
    pub b: usize,
    pub kappa: f64,
    /// Nominal row count: the smallest `n` with `n^(1-κ)` a power of two and
    /// `n^κ·d(d+1)²` an integer. The stacked matrix has `copies * a.len()`
    /// rows, which differs from `n` except when `a.len()` matches the
    /// idealized block size.
    pub n: u64,
    /// `log2(n^(1-κ))`; the block has `d+1` columns.
    pub d: usize,
    /// Row scaling `1/sqrt(d² + d)`.
    pub gamma: f64,
    /// Number of stacked copies of the base block, `n^κ·d(d+1)²`.
    pub copies: u64,
    pub z: LabeledMatrix,
    /// Probe parameter vector of dimension `d + 1`.
    pub beta_probe: Vec<f64>,
}

impl IndexInstance {
    /// Regularization strength `n^κ` paired with the squared-ℓ2 regularizer.
    pub fn reg_scale(&self) -> f64 {
        (self.n as f64).powf(self.kappa)
    }

    /// The exact regularized hinge objective at the probe vector.
    pub fn expected_objective(&self) -> f64 {
        let base = self.copies as f64;
        if self.a[self.b - 1] {
            2.0 * base
        } else {
            base
        }
    }
}

/// ±1 binary code of `value` in `bits` bits, least significant bit first.
fn signed_binary_code(value: usize, bits: usize) -> Vec<f64> {
    (0..bits)
        .map(|k| if (value >> k) & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

/// Builds an [`IndexInstance`] from a bit string and probe index.
///
/// `d` is the smallest width at least `ceil(log2(n0 + 1))` for which both
/// `n = 2^(d/(1-κ))` and `n^κ` are integers, so the loss identity is exact.
pub fn gen_index_instance(n0: usize, kappa: f64, a: &[bool], b: usize) -> Result<IndexInstance> {
    if a.len() != n0 || n0 == 0 {
        return Err(Error::InvalidShape(format!(
            "bit string length {} does not match n0 = {n0}",
            a.len()
        )));
    }
    if b < 1 || b > n0 {
        return Err(Error::InvalidShape(format!(
            "probe index {b} outside [1, {n0}]"
        )));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidShape(format!("kappa {kappa} outside (0, 1)")));
    }

    // Smallest bit width that codes 1..=n0 distinctly.
    let mut d_min = 1usize;
    while (1usize << d_min) <= n0 {
        d_min += 1;
    }

    let mut found: Option<(usize, u64, u64)> = None;
    for d in d_min..d_min + 64 {
        let t = d as f64 / (1.0 - kappa);
        let t_round = t.round();
        if (t - t_round).abs() > 1e-9 || t_round > 52.0 {
            continue;
        }
        let kt = kappa * t_round;
        let kt_round = kt.round();
        if (kt - kt_round).abs() > 1e-9 {
            continue;
        }
        let n = 1u64 << (t_round as u32);
        let n_kappa = 1u64 << (kt_round as u32);
        let copies = n_kappa * (d as u64) * ((d as u64 + 1) * (d as u64 + 1));
        found = Some((d, n, copies));
        break;
    }
    let (d, n, copies) = found.ok_or_else(|| {
        Error::InvalidShape(format!(
            "no valid width makes n^(1-kappa) a power of two for kappa = {kappa}"
        ))
    })?;

    let gamma = 1.0 / ((d * d + d) as f64).sqrt();
    let inv_gamma = ((d * d + d) as f64).sqrt();

    // Base block: one row per bit of `a`.
    let mut block: Vec<Vec<f64>> = Vec::with_capacity(n0);
    for (i, &bit) in a.iter().enumerate() {
        let mut row = if bit {
            signed_binary_code(i + 1, d)
        } else {
            vec![0.0; d]
        };
        row.push(d as f64);
        for v in &mut row {
            *v *= gamma;
        }
        block.push(row);
    }

    let total_rows = copies as usize * n0;
    let mut rows = Vec::with_capacity(total_rows);
    for _ in 0..copies {
        rows.extend(block.iter().cloned());
    }
    let x = DenseMatrix::from_rows(&rows);
    let mut z = LabeledMatrix::fold(
        &x,
        &vec![1.0; total_rows],
        format!("hardinstance:n0={n0},kappa={kappa},b={b}"),
    );
    z.rows_norm_bounded = true;

    let mut beta_probe = signed_binary_code(b, d);
    beta_probe.push(-1.0);
    for v in &mut beta_probe {
        *v *= inv_gamma;
    }

    Ok(IndexInstance {
        a: a.to_vec(),
        b,
        kappa,
        n,
        d,
        gamma,
        copies,
        z,
        beta_probe,
    })
}

/// Expands a compact bit-string literal like `"1011"` into bits.
pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::InvalidConfig(format!(
                "bit strings may only contain 0/1, found {other:?}"
            ))),
        })
        .collect()
}
