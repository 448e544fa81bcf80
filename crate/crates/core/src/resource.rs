//! Free-state theories and minimization of relative entropy over them.
//!
//! A theory fixes, for every block length `n`, a convex compact set `S_n` of
//! alternative states that is closed under tensor products and contains a
//! full-rank state at `n = 1`. Four representations are supported:
//!
//! - `Singleton`: the i.i.d. family `{σ₁^⊗n}` of classic Stein testing;
//! - `Diagonal`: all states diagonal in the fixed product basis (coherence
//!   theory); minimization has the closed form `S(Δ(ρ)) - S(ρ)`;
//! - `FullSpace`: every state is free, so the minimum is 0;
//! - `Polytope`: the convex hull of all tensor words over a finite generator
//!   list, minimized by Frank-Wolfe with the hull vertices as the linear
//!   oracle.
//!
//! Tensor-closure and convexity are structural for all four kinds, which is
//! the point of the finite-generator representation.

use crate::entropy::{rel_entropy, rel_entropy_grad_sigma, vn_entropy};
use crate::error::{Error, Result};
use crate::herm::HermitianMat;
use crate::state::MState;
use crate::xreal::XNNReal;
use serde::de;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Cap on explicit generator lists at level `n`.
pub const GENERATOR_CAP: usize = 4096;
/// Eigenvalue floor below which a designated full-rank state is rejected.
pub const FULL_RANK_TOL: f64 = 1e-9;

/// How the free sets `S_n` are generated from level-1 data.
#[derive(Clone, Debug)]
pub enum TheoryKind {
    /// `S_n = {σ₁^⊗n}`.
    Singleton(MState),
    /// All states diagonal in the computational product basis.
    Diagonal,
    /// All states.
    FullSpace,
    /// Convex hull of all n-fold tensor words over the generators.
    Polytope {
        generators: Vec<MState>,
        full_rank_witness: usize,
    },
}

impl TheoryKind {
    pub fn name(&self) -> &'static str {
        match self {
            TheoryKind::Singleton(_) => "singleton",
            TheoryKind::Diagonal => "diagonal",
            TheoryKind::FullSpace => "fullspace",
            TheoryKind::Polytope { .. } => "polytope",
        }
    }
}

/// An indexed family `n ↦ S_n` of free-state sets.
#[derive(Clone, Debug)]
pub struct FreeStateTheory {
    base_dim: usize,
    kind: TheoryKind,
}

impl FreeStateTheory {
    /// Validate the level-1 data; in particular the full-rank condition.
    pub fn new(base_dim: usize, kind: TheoryKind) -> Result<Self> {
        match &kind {
            TheoryKind::Singleton(sigma) => {
                if sigma.dim() != base_dim {
                    return Err(Error::DimMismatch {
                        left: sigma.dim(),
                        right: base_dim,
                    });
                }
                let min = sigma.min_eigenvalue()?;
                if min <= FULL_RANK_TOL {
                    return Err(Error::RankDeficient {
                        min_eigenvalue: min,
                    });
                }
            }
            TheoryKind::Polytope {
                generators,
                full_rank_witness,
            } => {
                if generators.is_empty() || *full_rank_witness >= generators.len() {
                    return Err(Error::BadWitness {
                        index: *full_rank_witness,
                        count: generators.len(),
                    });
                }
                for g in generators {
                    if g.dim() != base_dim {
                        return Err(Error::DimMismatch {
                            left: g.dim(),
                            right: base_dim,
                        });
                    }
                }
                let min = generators[*full_rank_witness].min_eigenvalue()?;
                if min <= FULL_RANK_TOL {
                    return Err(Error::RankDeficient {
                        min_eigenvalue: min,
                    });
                }
            }
            TheoryKind::Diagonal | TheoryKind::FullSpace => {}
        }
        Ok(FreeStateTheory { base_dim, kind })
    }

    pub fn singleton(sigma: MState) -> Result<Self> {
        let d = sigma.dim();
        Self::new(d, TheoryKind::Singleton(sigma))
    }

    pub fn diagonal(base_dim: usize) -> Self {
        FreeStateTheory {
            base_dim,
            kind: TheoryKind::Diagonal,
        }
    }

    pub fn full_space(base_dim: usize) -> Self {
        FreeStateTheory {
            base_dim,
            kind: TheoryKind::FullSpace,
        }
    }

    pub fn polytope(generators: Vec<MState>, full_rank_witness: usize) -> Result<Self> {
        let d = generators.first().map(|g| g.dim()).unwrap_or(0);
        Self::new(
            d,
            TheoryKind::Polytope {
                generators,
                full_rank_witness,
            },
        )
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn kind(&self) -> &TheoryKind {
        &self.kind
    }

    pub fn level_dim(&self, n: u32) -> Result<usize> {
        let d = self
            .base_dim
            .checked_pow(n)
            .unwrap_or(usize::MAX);
        if d > crate::herm::DIM_CAP {
            return Err(Error::DimensionCap {
                requested: d,
                cap: crate::herm::DIM_CAP,
            });
        }
        Ok(d)
    }

    /// The designated full-rank state of `S_1`, lifted to level `n`.
    pub fn full_rank_state(&self, n: u32) -> Result<MState> {
        match &self.kind {
            TheoryKind::Singleton(sigma) => sigma.pow(n),
            TheoryKind::Diagonal | TheoryKind::FullSpace => {
                Ok(MState::maximally_mixed(self.level_dim(n)?))
            }
            TheoryKind::Polytope {
                generators,
                full_rank_witness,
            } => generators[*full_rank_witness].pow(n),
        }
    }

    /// Explicit extreme points of `S_n` for the enumerable kinds.
    ///
    /// Singleton yields the one tensor power; Polytope yields all `k^n`
    /// tensor words (first factor most significant), capped at
    /// [`GENERATOR_CAP`]. Diagonal and FullSpace use structured paths and
    /// refuse to enumerate.
    pub fn free_generators(&self, n: u32) -> Result<Vec<MState>> {
        assert!(n >= 1);
        self.level_dim(n)?;
        match &self.kind {
            TheoryKind::Singleton(sigma) => Ok(vec![sigma.pow(n)?]),
            TheoryKind::Diagonal => Err(Error::StructuredKind { kind: "diagonal" }),
            TheoryKind::FullSpace => Err(Error::StructuredKind { kind: "fullspace" }),
            TheoryKind::Polytope { generators, .. } => {
                let k = generators.len() as u128;
                let count = k.checked_pow(n).unwrap_or(u128::MAX);
                if count > GENERATOR_CAP as u128 {
                    return Err(Error::GeneratorCap {
                        count,
                        cap: GENERATOR_CAP,
                    });
                }
                let mut words = Vec::with_capacity(count as usize);
                let k = generators.len();
                for idx in 0..count as usize {
                    // digits of idx, base k, most significant first
                    let mut digits = vec![0usize; n as usize];
                    let mut rem = idx;
                    for slot in (0..n as usize).rev() {
                        digits[slot] = rem % k;
                        rem /= k;
                    }
                    let mut word = generators[digits[0]].clone();
                    for &dg in &digits[1..] {
                        word = word.tensor(&generators[dg]);
                    }
                    words.push(word);
                }
                Ok(words)
            }
        }
    }

    /// Membership oracle for `S_n` within tolerance `tol` (trace distance for
    /// Singleton, off-diagonal mass for Diagonal, hull distance for Polytope).
    pub fn is_free(&self, n: u32, sigma: &MState, tol: f64) -> Result<bool> {
        let dim = self.level_dim(n)?;
        if sigma.dim() != dim {
            return Err(Error::DimMismatch {
                left: sigma.dim(),
                right: dim,
            });
        }
        match &self.kind {
            TheoryKind::Singleton(s1) => Ok(sigma.trace_distance(&s1.pow(n)?)? <= tol),
            TheoryKind::FullSpace => Ok(true),
            TheoryKind::Diagonal => {
                let off = (sigma.mat() - sigma.dephased().mat()).frob_norm();
                Ok(off <= tol)
            }
            TheoryKind::Polytope { .. } => {
                let vertices = self.free_generators(n)?;
                let dist = hull_distance(sigma, &vertices)?;
                Ok(dist <= tol)
            }
        }
    }

    /// `min_{σ ∈ S_n} D(ρ_n ‖ σ)` with a certified gap.
    pub fn min_rel_entropy_free(
        &self,
        rho_n: &MState,
        n: u32,
        tol: f64,
    ) -> Result<MinimizationResult> {
        let dim = self.level_dim(n)?;
        if rho_n.dim() != dim {
            return Err(Error::DimMismatch {
                left: rho_n.dim(),
                right: dim,
            });
        }
        match &self.kind {
            TheoryKind::Singleton(s1) => {
                let sigma_n = s1.pow(n)?;
                let value = rel_entropy(rho_n, &sigma_n)?;
                Ok(MinimizationResult {
                    value,
                    minimizer: sigma_n,
                    fw_gap: 0.0,
                    iterations: 0,
                })
            }
            TheoryKind::FullSpace => Ok(MinimizationResult {
                value: XNNReal::ZERO,
                minimizer: rho_n.clone(),
                fw_gap: 0.0,
                iterations: 0,
            }),
            TheoryKind::Diagonal => {
                // relative entropy of coherence: S(Δ(ρ)) - S(ρ)
                let dephased = rho_n.dephased();
                let value = vn_entropy(&dephased)? - vn_entropy(rho_n)?;
                Ok(MinimizationResult {
                    value: XNNReal::from_clamped(value),
                    minimizer: dephased,
                    fw_gap: 0.0,
                    iterations: 0,
                })
            }
            TheoryKind::Polytope { .. } => {
                let vertices = self.free_generators(n)?;
                let witness = self.full_rank_state(n)?;
                frank_wolfe_min_rel_entropy(rho_n, &vertices, &witness, tol, 2000)
            }
        }
    }

    /// The finite-n rate sequence `r_n = min D(ρ^⊗n ‖ S_n) / n` for `n = 1..=n_max`.
    pub fn regularized_rate(
        &self,
        rho: &MState,
        n_max: u32,
        tol: f64,
    ) -> Result<Vec<(u32, XNNReal)>> {
        let mut out = Vec::new();
        for n in 1..=n_max {
            let rho_n = rho.pow(n)?;
            let r = self.min_rel_entropy_free(&rho_n, n, tol)?;
            let inv_n = XNNReal::finite(1.0 / n as f64).expect("positive");
            out.push((n, r.value * inv_n));
        }
        Ok(out)
    }
}

/// Outcome of a free-set relative-entropy minimization.
#[derive(Clone, Debug)]
pub struct MinimizationResult {
    /// Certified upper bound on the minimum (`value - fw_gap` is the lower bound).
    pub value: XNNReal,
    /// The free state achieving `value`.
    pub minimizer: MState,
    /// Frank-Wolfe linearization gap; 0 for the closed-form kinds.
    pub fw_gap: f64,
    pub iterations: usize,
}

/// Euclidean (Frobenius) distance from a state to the hull of the vertices,
/// by Frank-Wolfe on the quadratic with exact line search.
fn hull_distance(sigma: &MState, vertices: &[MState]) -> Result<f64> {
    let k = vertices.len();
    // Gram data; iterations are then O(k^2)
    let mut gram = vec![vec![0.0; k]; k];
    let mut lin = vec![0.0; k];
    for i in 0..k {
        for j in 0..=i {
            let g = vertices[i].mat().inner(vertices[j].mat())?;
            gram[i][j] = g;
            gram[j][i] = g;
        }
        lin[i] = vertices[i].mat().inner(sigma.mat())?;
    }
    let c = sigma.mat().inner(sigma.mat())?;

    let mut w = vec![1.0 / k as f64; k];
    let obj = |w: &[f64]| -> f64 {
        let mut q = 0.0;
        for i in 0..k {
            for j in 0..k {
                q += w[i] * gram[i][j] * w[j];
            }
        }
        let l: f64 = w.iter().zip(&lin).map(|(wi, li)| wi * li).sum();
        0.5 * (q - 2.0 * l + c)
    };
    for _ in 0..20_000 {
        // gradient = Gw - lin
        let mut grad = vec![0.0; k];
        for i in 0..k {
            grad[i] = (0..k).map(|j| gram[i][j] * w[j]).sum::<f64>() - lin[i];
        }
        let jstar = (0..k)
            .min_by(|&a, &b| grad[a].partial_cmp(&grad[b]).unwrap())
            .unwrap();
        let gap: f64 = (0..k).map(|i| grad[i] * w[i]).sum::<f64>() - grad[jstar];
        if gap <= 1e-16 {
            break;
        }
        // exact step along e_j - w for the quadratic
        let mut d_gd = 0.0; // dᵀ G d
        for i in 0..k {
            for j in 0..k {
                let di = (if i == jstar { 1.0 } else { 0.0 }) - w[i];
                let dj = (if j == jstar { 1.0 } else { 0.0 }) - w[j];
                d_gd += di * gram[i][j] * dj;
            }
        }
        let gamma = if d_gd <= 1e-18 {
            1.0
        } else {
            (gap / d_gd).clamp(0.0, 1.0)
        };
        for (i, wi) in w.iter_mut().enumerate() {
            let di = (if i == jstar { 1.0 } else { 0.0 }) - *wi;
            *wi += gamma * di;
        }
    }
    Ok((2.0 * obj(&w)).max(0.0).sqrt())
}

/// Frank-Wolfe over hull weights for `σ ↦ D(ρ‖σ)`.
///
/// Gradients are taken at the δ-mixed iterate `(1-δ_t) σ_w + δ_t σ_fr` with
/// the full-rank witness, `δ_t = max(1e-6, 0.1/(t+2))`, which keeps them
/// bounded; the returned value is evaluated at the unmixed weights with the
/// infinite-branch semantics intact.
fn frank_wolfe_min_rel_entropy(
    rho: &MState,
    vertices: &[MState],
    witness: &MState,
    tol: f64,
    max_iter: usize,
) -> Result<MinimizationResult> {
    let k = vertices.len();
    let dim = rho.dim();

    // infeasibility: the maximal-support element of the hull is any interior
    // mixture; if it cannot support ρ, no hull point can
    let mut unif = HermitianMat::zeros(dim);
    for v in vertices {
        unif = &unif + &v.mat().scale(1.0 / k as f64);
    }
    let unif = MState::from_trusted(unif);
    if rel_entropy(rho, &unif)?.is_infinite() {
        return Ok(MinimizationResult {
            value: XNNReal::Infinity,
            minimizer: unif,
            fw_gap: 0.0,
            iterations: 0,
        });
    }

    let sigma_of = |w: &[f64]| -> MState {
        let mut m = HermitianMat::zeros(dim);
        for (wi, v) in w.iter().zip(vertices) {
            if *wi > 0.0 {
                m = &m + &v.mat().scale(*wi);
            }
        }
        MState::from_trusted(m)
    };
    let d_of = |w: &[f64]| -> Result<f64> {
        Ok(rel_entropy(rho, &sigma_of(w))?
            .to_finite()
            .unwrap_or(f64::INFINITY))
    };

    let mut w = vec![1.0 / k as f64; k];
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut best_gap = f64::INFINITY;
    let mut since_improvement = 0usize;
    for t in 0..max_iter {
        iterations = t + 1;
        let delta = (0.1 / (t + 2) as f64).max(1e-6);
        let sigma_w = sigma_of(&w);
        let mixed = MState::from_trusted(
            &sigma_w.mat().scale(1.0 - delta) + &witness.mat().scale(delta),
        );
        let grad = rel_entropy_grad_sigma(rho, &mixed)?;
        let scores: Vec<f64> = vertices
            .iter()
            .map(|v| grad.inner(v.mat()))
            .collect::<Result<_>>()?;
        // lowest index wins ties: strict less-than scan
        let mut jstar = 0;
        for (j, s) in scores.iter().enumerate() {
            if *s < scores[jstar] {
                jstar = j;
            }
        }
        let at_w = grad.inner(sigma_w.mat())?;
        gap = (at_w - scores[jstar]).max(0.0);
        if gap <= tol {
            break;
        }
        // the linearization gap plateaus once the line search is at its
        // resolution; stop burning iterations then
        if gap < best_gap * (1.0 - 1e-3) {
            best_gap = gap;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement > 50 {
                break;
            }
        }
        // golden-section line search on the segment toward the chosen vertex
        let mut trial = w.clone();
        let f_gamma = |gamma: f64, buf: &mut Vec<f64>| -> Result<f64> {
            for (b, wi) in buf.iter_mut().zip(&w) {
                *b = wi * (1.0 - gamma);
            }
            buf[jstar] += gamma;
            d_of(buf)
        };
        let golden = 0.5 * (3.0 - 5.0f64.sqrt());
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let (mut g1, mut g2) = (lo + golden * (hi - lo), hi - golden * (hi - lo));
        let (mut f1, mut f2) = (f_gamma(g1, &mut trial)?, f_gamma(g2, &mut trial)?);
        for _ in 0..24 {
            if f1 <= f2 {
                hi = g2;
                g2 = g1;
                f2 = f1;
                g1 = lo + golden * (hi - lo);
                f1 = f_gamma(g1, &mut trial)?;
            } else {
                lo = g1;
                g1 = g2;
                f1 = f2;
                g2 = hi - golden * (hi - lo);
                f2 = f_gamma(g2, &mut trial)?;
            }
        }
        let gamma = if f1 <= f2 { g1 } else { g2 };
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = *wi * (1.0 - gamma) + if i == jstar { gamma } else { 0.0 };
        }
    }

    // recompute the certificate exactly at the returned weights
    let minimizer = sigma_of(&w);
    let mixed = MState::from_trusted(
        &minimizer.mat().scale(1.0 - 1e-6) + &witness.mat().scale(1e-6),
    );
    if let Ok(grad) = rel_entropy_grad_sigma(rho, &mixed) {
        let mut min_score = f64::INFINITY;
        for v in vertices {
            min_score = min_score.min(grad.inner(v.mat())?);
        }
        gap = (grad.inner(minimizer.mat())? - min_score).max(0.0);
    }
    let value = rel_entropy(rho, &minimizer)?;
    Ok(MinimizationResult {
        value,
        minimizer,
        fw_gap: gap,
        iterations,
    })
}

#[derive(Serialize, Deserialize)]
struct TheoryJson {
    kind: String,
    base_dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    states: Vec<crate::herm::MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    full_rank_witness: Option<usize>,
}

impl Serialize for FreeStateTheory {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (states, witness) = match &self.kind {
            TheoryKind::Singleton(sigma) => {
                (vec![crate::herm::MatrixJson::of(sigma.mat())], None)
            }
            TheoryKind::Diagonal | TheoryKind::FullSpace => (Vec::new(), None),
            TheoryKind::Polytope {
                generators,
                full_rank_witness,
            } => (
                generators
                    .iter()
                    .map(|g| crate::herm::MatrixJson::of(g.mat()))
                    .collect(),
                Some(*full_rank_witness),
            ),
        };
        TheoryJson {
            kind: self.kind.name().to_string(),
            base_dim: self.base_dim,
            states,
            full_rank_witness: witness,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FreeStateTheory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = TheoryJson::deserialize(d)?;
        let decode_states = |states: Vec<crate::herm::MatrixJson>| -> Result<Vec<MState>> {
            states
                .into_iter()
                .map(|m| MState::new(m.decode()?))
                .collect()
        };
        let kind = match raw.kind.as_str() {
            "singleton" => {
                let mut states = decode_states(raw.states).map_err(de::Error::custom)?;
                if states.len() != 1 {
                    return Err(de::Error::custom(
                        "singleton theory needs exactly one state",
                    ));
                }
                TheoryKind::Singleton(states.remove(0))
            }
            "diagonal" => TheoryKind::Diagonal,
            "fullspace" => TheoryKind::FullSpace,
            "polytope" => TheoryKind::Polytope {
                generators: decode_states(raw.states).map_err(de::Error::custom)?,
                full_rank_witness: raw.full_rank_witness.unwrap_or(0),
            },
            other => return Err(de::Error::custom(format!("unknown theory kind {other:?}"))),
        };
        FreeStateTheory::new(raw.base_dim, kind).map_err(de::Error::custom)
    }
}
