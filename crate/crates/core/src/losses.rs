//! Hinge-like classification losses, weighted loss/gradient evaluation, and
//! the classification complexity ratio μ.
//!
//! Losses follow the sign convention in which they are uniformly close to
//! `relu(z) = max(0, z)`: logistic is `ln(1 + e^z)`, hinge is `max(0, 1+z)`.
//! Negating the parameter vector recovers the usual orientation, so nothing
//! is lost. Each loss carries certified constants `(L, a1, a2)`: Lipschitz
//! constant, sup-distance to the ReLU, and a lower bound on `[0, ∞)`.

use crate::coreset::Coreset;
use crate::data::LabeledMatrix;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LossKind {
    ReLU,
    Hinge,
    Logistic,
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossKind::ReLU => write!(f, "relu"),
            LossKind::Hinge => write!(f, "hinge"),
            LossKind::Logistic => write!(f, "logistic"),
        }
    }
}

/// A scalar loss close to the ReLU, with certified constants.
#[derive(Debug, Clone, Copy)]
pub struct NiceHinge {
    kind: LossKind,
    lipschitz: f64,
    relu_distance: f64,
    floor_on_nonneg: f64,
}

impl NiceHinge {
    pub fn relu() -> Self {
        Self {
            kind: LossKind::ReLU,
            lipschitz: 1.0,
            relu_distance: 0.0,
            floor_on_nonneg: 0.0,
        }
    }

    pub fn hinge() -> Self {
        Self {
            kind: LossKind::Hinge,
            lipschitz: 1.0,
            relu_distance: 1.0,
            floor_on_nonneg: 1.0,
        }
    }

    pub fn logistic() -> Self {
        Self {
            kind: LossKind::Logistic,
            lipschitz: 1.0,
            relu_distance: std::f64::consts::LN_2,
            floor_on_nonneg: std::f64::consts::LN_2,
        }
    }

    pub fn from_kind(kind: LossKind) -> Self {
        match kind {
            LossKind::ReLU => Self::relu(),
            LossKind::Hinge => Self::hinge(),
            LossKind::Logistic => Self::logistic(),
        }
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    /// `(L, a1, a2)`.
    pub fn constants(&self) -> (f64, f64, f64) {
        (self.lipschitz, self.relu_distance, self.floor_on_nonneg)
    }

    /// Relative-error guarantees need a strictly positive floor `a2`; the
    /// ReLU has `a2 = 0` and only supports additive-error statements.
    pub fn supports_relative_error(&self) -> bool {
        self.floor_on_nonneg > 0.0
    }

    /// Whether the loss is differentiable everywhere (subgradients are used
    /// at kinks otherwise).
    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, LossKind::Logistic)
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match self.kind {
            LossKind::ReLU => z.max(0.0),
            LossKind::Hinge => (1.0 + z).max(0.0),
            LossKind::Logistic => {
                // ln(1 + e^z) = z + ln(1 + e^-z) for large z
                if z > 30.0 {
                    z + (-z).exp().ln_1p()
                } else {
                    z.exp().ln_1p()
                }
            }
        }
    }

    /// Derivative (subgradient 0 at the hinge/ReLU kinks, so flat regions
    /// report exactly zero gradient).
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match self.kind {
            LossKind::ReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LossKind::Hinge => {
                if z > -1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LossKind::Logistic => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// Sweeps a dense grid checking the three certified properties:
    /// `|f - relu| <= a1`, `L`-Lipschitz between adjacent points, and
    /// `f(z) >= a2` on the nonnegative axis.
    pub fn certify(&self, grid_points: usize) -> bool {
        let (l, a1, a2) = self.constants();
        let lo = -40.0;
        let hi = 40.0;
        let step = (hi - lo) / (grid_points.max(2) - 1) as f64;
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..grid_points {
            let z = lo + step * k as f64;
            let fz = self.value(z);
            if (fz - z.max(0.0)).abs() > a1 + 1e-12 {
                return false;
            }
            if z >= 0.0 && fz < a2 - 1e-12 {
                return false;
            }
            if let Some((pz, pf)) = prev {
                if (fz - pf).abs() > l * (z - pz).abs() + 1e-12 {
                    return false;
                }
            }
            prev = Some((z, fz));
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RegKind {
    None,
    L2Squared,
    L2,
    L1,
}

/// Additive regularization term `scale * R(β)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Regularizer {
    pub kind: RegKind,
    pub scale: f64,
}

impl Regularizer {
    pub fn none() -> Self {
        Self {
            kind: RegKind::None,
            scale: 0.0,
        }
    }

    pub fn l2_squared(scale: f64) -> Self {
        assert!(scale >= 0.0);
        Self {
            kind: RegKind::L2Squared,
            scale,
        }
    }

    pub fn l2(scale: f64) -> Self {
        assert!(scale >= 0.0);
        Self {
            kind: RegKind::L2,
            scale,
        }
    }

    pub fn l1(scale: f64) -> Self {
        assert!(scale >= 0.0);
        Self {
            kind: RegKind::L1,
            scale,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, RegKind::None) || self.scale == 0.0
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        if self.is_none() {
            return 0.0;
        }
        match self.kind {
            RegKind::None => 0.0,
            RegKind::L2Squared => self.scale * beta.iter().map(|v| v * v).sum::<f64>(),
            RegKind::L2 => self.scale * beta.iter().map(|v| v * v).sum::<f64>().sqrt(),
            RegKind::L1 => self.scale * beta.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }

    /// Gradient (subgradient 0 at nondifferentiable points of ℓ1/ℓ2).
    pub fn grad(&self, beta: &[f64]) -> Vec<f64> {
        if self.is_none() {
            return vec![0.0; beta.len()];
        }
        match self.kind {
            RegKind::None => vec![0.0; beta.len()],
            RegKind::L2Squared => beta.iter().map(|v| 2.0 * self.scale * v).collect(),
            RegKind::L2 => {
                let norm = beta.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    vec![0.0; beta.len()]
                } else {
                    beta.iter().map(|v| self.scale * v / norm).collect()
                }
            }
            RegKind::L1 => beta.iter().map(|v| self.scale * v.signum_or_zero()).collect(),
        }
    }
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

fn check_beta(z: &LabeledMatrix, beta: &[f64]) -> Result<()> {
    if beta.len() != z.d() {
        return Err(Error::DimMismatch {
            expected: z.d(),
            got: beta.len(),
        });
    }
    if !beta.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("parameter vector"));
    }
    Ok(())
}

/// Full-data objective `Σ_i f((Zβ)_i) + reg(β)`.
pub fn total_loss(z: &LabeledMatrix, beta: &[f64], f: &NiceHinge, reg: &Regularizer) -> Result<f64> {
    check_beta(z, beta)?;
    let mut sum = 0.0;
    for i in 0..z.n() {
        sum += f.value(crate::linalg::dot(z.matrix().row(i), beta));
    }
    let total = sum + reg.value(beta);
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NonFinite("total_loss"))
    }
}

/// Coreset objective `Σ_j w_j f((Zβ)_{i_j}) + reg(β)`. The regularizer is not
/// reweighted.
pub fn weighted_loss(
    coreset: &Coreset,
    z: &LabeledMatrix,
    beta: &[f64],
    f: &NiceHinge,
    reg: &Regularizer,
) -> Result<f64> {
    check_beta(z, beta)?;
    let n = z.n();
    let mut sum = 0.0;
    for (&i, &w) in coreset.indices().iter().zip(coreset.weights()) {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, rows: n });
        }
        sum += w * f.value(crate::linalg::dot(z.matrix().row(i), beta));
    }
    let total = sum + reg.value(beta);
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::NonFinite("weighted_loss"))
    }
}

/// Gradient of the full-data objective: `Zᵀ f'(Zβ) + ∇reg(β)`.
pub fn loss_gradient(
    z: &LabeledMatrix,
    beta: &[f64],
    f: &NiceHinge,
    reg: &Regularizer,
) -> Result<Vec<f64>> {
    check_beta(z, beta)?;
    let mut grad = reg.grad(beta);
    for i in 0..z.n() {
        let row = z.matrix().row(i);
        let slope = f.derivative(crate::linalg::dot(row, beta));
        if slope != 0.0 {
            for (g, &x) in grad.iter_mut().zip(row) {
                *g += slope * x;
            }
        }
    }
    Ok(grad)
}

/// Estimated classification complexity: a certified lower bound on
/// `sup_{β≠0} ‖(Zβ)⁺‖₁ / ‖(Zβ)⁻‖₁`, which is infinite exactly when some
/// direction separates the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuEstimate {
    Finite(f64),
    Infinite,
}

impl MuEstimate {
    pub fn is_infinite(&self) -> bool {
        matches!(self, MuEstimate::Infinite)
    }

    pub fn value(&self) -> f64 {
        match self {
            MuEstimate::Finite(v) => *v,
            MuEstimate::Infinite => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for MuEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MuEstimate::Finite(v) => write!(f, "{v}"),
            MuEstimate::Infinite => write!(f, "inf"),
        }
    }
}

const SEPARABLE_TOL: f64 = 1e-12;

/// `(‖(Zβ)⁺‖₁, ‖(Zβ)⁻‖₁)`.
pub fn signed_masses(z: &LabeledMatrix, beta: &[f64]) -> (f64, f64) {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for i in 0..z.n() {
        let v = crate::linalg::dot(z.matrix().row(i), beta);
        if v > 0.0 {
            pos += v;
        } else {
            neg -= v;
        }
    }
    (pos, neg)
}

/// Ratio value for a direction, orientation-symmetrized: the larger of
/// `pos/neg` and `neg/pos`. `None` when `Zβ = 0`.
fn symmetric_ratio(pos: f64, neg: f64) -> Option<MuEstimate> {
    if pos == 0.0 && neg == 0.0 {
        return None;
    }
    let (hi, lo) = if pos >= neg { (pos, neg) } else { (neg, pos) };
    if lo < SEPARABLE_TOL * hi {
        Some(MuEstimate::Infinite)
    } else {
        Some(MuEstimate::Finite(hi / lo))
    }
}

fn ratio_gradient(z: &LabeledMatrix, beta: &[f64], pos: f64, neg: f64) -> Vec<f64> {
    // d(pos)/dβ = Zᵀ 1[Zβ > 0],  d(neg)/dβ = -Zᵀ 1[Zβ < 0]
    let d = z.d();
    let mut gpos = vec![0.0; d];
    let mut gneg = vec![0.0; d];
    for i in 0..z.n() {
        let row = z.matrix().row(i);
        let v = crate::linalg::dot(row, beta);
        if v > 0.0 {
            for (g, &x) in gpos.iter_mut().zip(row) {
                *g += x;
            }
        } else if v < 0.0 {
            for (g, &x) in gneg.iter_mut().zip(row) {
                *g -= x;
            }
        }
    }
    // ∇(pos/neg) = (∇pos · neg - pos · ∇neg) / neg²
    let n2 = neg * neg;
    gpos.iter()
        .zip(&gneg)
        .map(|(&gp, &gn)| (gp * neg - pos * gn) / n2)
        .collect()
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 1e-300 {
        return false;
    }
    for x in v {
        *x /= norm;
    }
    true
}

/// Best-effort lower bound on the complexity ratio μ, plus the maximizing
/// direction found.
///
/// Candidates: `budget` random unit directions, ± every canonical basis
/// direction, and projected-gradient ascent (step halving, 200 steps) from
/// the ten best random starts. Directions whose smaller signed mass is below
/// `1e-12` of the larger are reported as [`MuEstimate::Infinite`]: the data
/// is separable along them.
pub fn estimate_mu(z: &LabeledMatrix, budget: usize, seed: u64) -> (MuEstimate, Vec<f64>) {
    let d = z.d();
    let mut rng = SplitMix64::new(seed);

    let mut best = MuEstimate::Finite(0.0);
    let mut best_beta = vec![0.0; d];
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();

    let consider = |beta: &[f64],
                        best: &mut MuEstimate,
                        best_beta: &mut Vec<f64>,
                        scored: Option<&mut Vec<(f64, Vec<f64>)>>|
     -> bool {
        let (pos, neg) = signed_masses(z, beta);
        match symmetric_ratio(pos, neg) {
            None => false,
            Some(MuEstimate::Infinite) => {
                *best = MuEstimate::Infinite;
                *best_beta = if pos >= neg {
                    beta.to_vec()
                } else {
                    beta.iter().map(|v| -v).collect()
                };
                true
            }
            Some(MuEstimate::Finite(r)) => {
                let oriented: Vec<f64> = if pos >= neg {
                    beta.to_vec()
                } else {
                    beta.iter().map(|v| -v).collect()
                };
                if let Some(s) = scored {
                    s.push((r, oriented.clone()));
                }
                if let MuEstimate::Finite(b) = best {
                    if r > *b {
                        *best = MuEstimate::Finite(r);
                        *best_beta = oriented;
                    }
                }
                false
            }
        }
    };

    // canonical directions
    for k in 0..d {
        let mut e = vec![0.0; d];
        e[k] = 1.0;
        if consider(&e, &mut best, &mut best_beta, None) {
            return (best, best_beta);
        }
    }
    // random unit directions
    for _ in 0..budget.max(1) {
        let dir = rng.next_unit_vector(d);
        if consider(&dir, &mut best, &mut best_beta, Some(&mut scored)) {
            return (best, best_beta);
        }
    }

    // ascent from the ten best random starts
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    scored.truncate(10);
    for (_, start) in scored {
        let mut beta = start;
        if !normalize(&mut beta) {
            continue;
        }
        let (mut pos, mut neg) = signed_masses(z, &beta);
        let mut cur = pos / neg;
        let mut step = 1.0;
        for _ in 0..200 {
            if neg < SEPARABLE_TOL * pos {
                return (MuEstimate::Infinite, beta);
            }
            let mut g = ratio_gradient(z, &beta, pos, neg);
            if !normalize(&mut g) {
                break;
            }
            let mut cand: Vec<f64> = beta.iter().zip(&g).map(|(b, gi)| b + step * gi).collect();
            if !normalize(&mut cand) {
                break;
            }
            let (cpos, cneg) = signed_masses(z, &cand);
            if cpos > 0.0 && cneg < SEPARABLE_TOL * cpos {
                return (MuEstimate::Infinite, cand);
            }
            let cr = if cneg > 0.0 { cpos / cneg } else { 0.0 };
            if cr > cur {
                beta = cand;
                pos = cpos;
                neg = cneg;
                cur = cr;
            } else {
                step *= 0.5;
                if step < 1e-12 {
                    break;
                }
            }
        }
        if let MuEstimate::Finite(b) = best {
            if cur > b {
                best = MuEstimate::Finite(cur);
                best_beta = beta;
            }
        }
    }

    (best, best_beta)
}
