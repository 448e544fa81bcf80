//! Certified minimax type-II errors for quantum hypothesis testing.
//!
//! The basic primitive is the Neyman-Pearson problem against one alternative:
//! minimize `Tr[Tσ]` over tests `0 ≤ T ≤ I` with type-I error
//! `Tr[(I-T)ρ] ≤ ε`. Its Lagrangian dual is the concave one-dimensional
//! `g(λ) = λ(1-ε) - Tr[(λρ - σ)₊]`, maximized by golden section over a
//! doubling bracket; the optimal test is recovered from the spectral
//! projectors of `λ*ρ - σ`, with the kernel component interpolated so the
//! type-I constraint is met exactly. Weak duality certifies every answer:
//! the reported `gap` bounds the distance to optimality.
//!
//! Against a free-state set the adversary maximizes over a polytope of
//! alternatives. Both feasible sets are convex and compact and the objective
//! is bilinear, so the minimax exchange is an algorithmic identity here; it
//! is never assumed silently, because every instance returns a primal test,
//! a dual pair `(λ, w)`, and the gap between them. Two-generator hulls are
//! solved by an exact one-dimensional search; larger hulls by supergradient
//! ascent on the joint dual with Polyak steps.

use crate::error::{Error, Result};
use crate::herm::HermitianMat;
use crate::parallel;
use crate::resource::{FreeStateTheory, TheoryKind};
use crate::state::MState;
use crate::xreal::{Prob, XNNReal};
use ndarray::Array2;
use num_complex::Complex64;

/// Default duality-gap tolerance for β values.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Dual bracket expansion limit.
const LAMBDA_CAP: f64 = 1e12;
/// Relative eigenvalue tolerance for kernel detection in primal recovery,
/// scaled by the pencil magnitude `λ‖ρ‖ + ‖σ‖`.
const KERNEL_REL_TOL: f64 = 1e-9;
/// Hard cap on dual evaluations per minimax instance.
const EVAL_CAP: usize = 100_000;
/// Type-I feasibility slack.
const FEAS_SLACK: f64 = 1e-8;

/// A two-outcome POVM `{T, I-T}` with `0 ≤ T ≤ I`.
#[derive(Clone, Debug)]
pub struct Povm2 {
    t: HermitianMat,
}

impl Povm2 {
    /// Validates the operator interval constraint within tolerance `1e-9`.
    pub fn new(t: HermitianMat) -> Result<Self> {
        let evs = t.eigvalsh()?;
        let (lo, hi) = (evs[0], *evs.last().unwrap());
        if lo < -1e-9 {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
        if hi > 1.0 + 1e-9 {
            return Err(Error::NotPsd {
                min_eigenvalue: 1.0 - hi,
            });
        }
        Ok(Povm2 { t })
    }

    pub(crate) fn from_trusted(t: HermitianMat) -> Self {
        Povm2 { t }
    }

    pub fn mat(&self) -> &HermitianMat {
        &self.t
    }

    /// `Tr[(I - T) ρ]`.
    pub fn type_one_error(&self, rho: &MState) -> Result<f64> {
        Ok(1.0 - self.t.inner(rho.mat())?)
    }
}

/// A certified value of `β_ε` with its primal test and dual certificate.
#[derive(Clone, Debug)]
pub struct BetaResult {
    /// Primal value: the worst-case type-II error of `test`. Upper bound.
    pub beta: Prob,
    /// Feasible test achieving `beta`.
    pub test: Povm2,
    /// Dual multiplier of the type-I constraint.
    pub dual_lambda: f64,
    /// Simplex weights over the adversary generators at the dual value.
    pub dual_weights: Vec<f64>,
    /// `primal - dual ≥ 0` up to rounding; bounds the distance to the optimum.
    pub gap: f64,
    /// Whether `gap ≤ tol` and the test is feasible. Callers must check.
    pub certified: bool,
    /// Dual evaluations spent.
    pub iterations: usize,
}

/// Spectral data of the pencil `S(λ) = λρ - σ` at a fixed λ, with the pieces
/// needed for the dual value and primal recovery.
struct PencilEig {
    values: Vec<f64>,
    vectors: Array2<Complex64>,
}

/// One Neyman-Pearson instance: ρ against a fixed σ.
struct NpInstance<'a> {
    rho: &'a HermitianMat,
    sigma: HermitianMat,
    one_minus_eps: f64,
    /// when σ = cI the pencil shares ρ's eigenvectors; (c, ρ eigendata)
    scalar_path: Option<(f64, PencilEig)>,
    rho_norm: f64,
    sigma_norm: f64,
    evals: std::cell::Cell<usize>,
}

impl<'a> NpInstance<'a> {
    fn new(rho: &'a MState, sigma: HermitianMat, eps: Prob) -> Result<Self> {
        let scalar_path = match sigma.as_scalar(1e-13) {
            Some(c) => {
                let spec = rho.mat().eigh()?;
                Some((
                    c,
                    PencilEig {
                        values: spec.values,
                        vectors: spec.vectors,
                    },
                ))
            }
            None => None,
        };
        Ok(NpInstance {
            rho: rho.mat(),
            rho_norm: rho.mat().frob_norm(),
            sigma_norm: sigma.frob_norm(),
            sigma,
            one_minus_eps: 1.0 - eps.value(),
            scalar_path,
            evals: std::cell::Cell::new(0),
        })
    }

    fn bump(&self) {
        self.evals.set(self.evals.get() + 1);
    }

    /// `g(λ) = λ(1-ε) - Tr[(λρ - σ)₊]`.
    fn dual(&self, lambda: f64) -> Result<f64> {
        self.bump();
        let pos_sum = match &self.scalar_path {
            Some((c, rho_eig)) => rho_eig
                .values
                .iter()
                .map(|r| (lambda * r - c).max(0.0))
                .sum::<f64>(),
            None => {
                let s = &self.rho.scale(lambda) - &self.sigma;
                s.eigvalsh()?.iter().map(|v| v.max(0.0)).sum::<f64>()
            }
        };
        Ok(lambda * self.one_minus_eps - pos_sum)
    }

    /// Full pencil eigendata at λ (reuses ρ's basis on the scalar path).
    fn pencil(&self, lambda: f64) -> Result<PencilEig> {
        self.bump();
        match &self.scalar_path {
            Some((c, rho_eig)) => Ok(PencilEig {
                values: rho_eig.values.iter().map(|r| lambda * r - c).collect(),
                vectors: rho_eig.vectors.clone(),
            }),
            None => {
                let s = &self.rho.scale(lambda) - &self.sigma;
                let spec = s.eigh()?;
                Ok(PencilEig {
                    values: spec.values,
                    vectors: spec.vectors,
                })
            }
        }
    }

    fn kernel_tol(&self, lambda: f64) -> f64 {
        KERNEL_REL_TOL * (lambda.abs() * self.rho_norm + self.sigma_norm)
    }

    /// Recover the optimal test at λ: positive projector plus the kernel
    /// component weighted so that `Tr[Tρ] = 1-ε` when possible.
    fn recover(&self, lambda: f64) -> Result<Recovery> {
        let eig = self.pencil(lambda)?;
        let ktol = self.kernel_tol(lambda);
        let d = eig.values.len();

        let mut pos = Vec::new();
        let mut ker = Vec::new();
        for (i, &v) in eig.values.iter().enumerate() {
            if v > ktol {
                pos.push(i);
            } else if v >= -ktol {
                ker.push(i);
            }
        }
        // expectations <u_i| ρ |u_i>
        let expect = |idxs: &[usize], m: &HermitianMat| -> f64 {
            let a = m.as_array();
            let mut total = 0.0;
            for &k in idxs {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    let mut row = Complex64::new(0.0, 0.0);
                    for j in 0..d {
                        row += a[(i, j)] * eig.vectors[(j, k)];
                    }
                    acc += eig.vectors[(i, k)].conj() * row;
                }
                total += acc.re;
            }
            total
        };
        let a = expect(&pos, self.rho);
        let m = expect(&ker, self.rho);
        let t_interp = if m > 1e-13 {
            ((self.one_minus_eps - a) / m).clamp(0.0, 1.0)
        } else {
            0.0
        };

        // T = P_pos + t P_ker
        let mut t = Array2::<Complex64>::zeros((d, d));
        for (weight, idxs) in [(1.0, &pos), (t_interp, &ker)] {
            if weight == 0.0 {
                continue;
            }
            for &k in idxs {
                for i in 0..d {
                    for j in 0..d {
                        t[(i, j)] +=
                            eig.vectors[(i, k)] * eig.vectors[(j, k)].conj() * weight;
                    }
                }
            }
        }
        let test = HermitianMat::from_hermitian_parts(t);
        let type_one = 1.0 - (a + t_interp * m);
        let pos_sum: f64 = pos.iter().map(|&i| eig.values[i]).sum();
        let dual_value = lambda * self.one_minus_eps - pos_sum;
        Ok(Recovery {
            test,
            t_interp,
            type_one,
            lambda,
            dual_value,
            tr_t_rho: a + t_interp * m,
            pos_count: pos.len(),
            ker_count: ker.len(),
        })
    }

    /// Maximize the concave dual over `λ ≥ 0`: doubling bracket, then golden
    /// section to the floating-point limit.
    fn maximize_dual(&self) -> Result<(f64, f64)> {
        let g0 = self.dual(0.0)?;
        let mut lam_prev = 0.0;
        let mut lam_cur = 1.0;
        let mut g_cur = self.dual(lam_cur)?;
        let (lo, hi);
        if g_cur <= g0 {
            // concavity puts the max inside [0, 1]
            lo = 0.0;
            hi = lam_cur;
        } else {
            loop {
                let lam_next = lam_cur * 2.0;
                if lam_next > LAMBDA_CAP {
                    return Err(Error::UnboundedDual { lambda: lam_next });
                }
                let g_next = self.dual(lam_next)?;
                if g_next < g_cur {
                    lo = lam_prev;
                    hi = lam_next;
                    break;
                }
                lam_prev = lam_cur;
                lam_cur = lam_next;
                g_cur = g_next;
            }
        }
        self.golden(lo, hi)
    }

    /// Golden-section max of the dual on `[lo, hi]`; returns `(λ*, g(λ*))`.
    fn golden(&self, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
        let golden = 0.5 * (3.0 - 5.0f64.sqrt());
        let mut x1 = lo + golden * (hi - lo);
        let mut x2 = hi - golden * (hi - lo);
        let mut f1 = self.dual(x1)?;
        let mut f2 = self.dual(x2)?;
        let mut iters = 0;
        while hi - lo > 1e-13 * hi.max(1.0) && iters < 200 {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = lo + golden * (hi - lo);
                f1 = self.dual(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = hi - golden * (hi - lo);
                f2 = self.dual(x2)?;
            }
            iters += 1;
        }
        Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
    }

    /// Cheaper re-maximization around a known good multiplier: expand a
    /// window around the hint until it brackets the maximum, then golden.
    fn maximize_dual_warm(&self, lambda_hint: f64) -> Result<(f64, f64)> {
        if lambda_hint <= 0.0 {
            return self.maximize_dual();
        }
        let mut lo = lambda_hint * 0.5;
        let mut mid = lambda_hint;
        let mut hi = lambda_hint * 2.0;
        let mut g_lo = self.dual(lo)?;
        let mut g_mid = self.dual(mid)?;
        let mut g_hi = self.dual(hi)?;
        for _ in 0..60 {
            if g_mid >= g_lo && g_mid >= g_hi {
                return self.golden(lo, hi);
            }
            if g_lo > g_mid {
                // max is left of the window
                hi = mid;
                g_hi = g_mid;
                mid = lo;
                g_mid = g_lo;
                lo *= 0.25;
                if lo < 1e-14 {
                    lo = 0.0;
                    return self.golden(lo, hi);
                }
                g_lo = self.dual(lo)?;
            } else {
                // max is right of the window
                if hi > LAMBDA_CAP {
                    return Err(Error::UnboundedDual { lambda: hi });
                }
                lo = mid;
                g_lo = g_mid;
                mid = hi;
                g_mid = g_hi;
                hi *= 4.0;
                g_hi = self.dual(hi)?;
            }
        }
        self.golden(0.0, hi)
    }
}

#[derive(Clone)]
struct Recovery {
    test: HermitianMat,
    t_interp: f64,
    type_one: f64,
    lambda: f64,
    dual_value: f64,
    tr_t_rho: f64,
    pos_count: usize,
    ker_count: usize,
}

/// `β_ε(ρ‖σ)` against a single alternative, with a certified gap.
pub fn np_beta(rho: &MState, sigma: &MState, eps: Prob, tol: f64) -> Result<BetaResult> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    check_eps(eps)?;
    let inst = NpInstance::new(rho, sigma.mat().clone(), eps)?;
    let (lambda, _) = inst.maximize_dual()?;
    let rec = inst.recover(lambda)?;
    let primal = rec.test.inner(sigma.mat())?;
    finish_single(rec, primal, vec![1.0], tol, eps, inst.evals.get())
}

fn check_eps(eps: Prob) -> Result<()> {
    if eps.value() <= 0.0 || eps.value() >= 1.0 {
        return Err(Error::InvalidProbability { value: eps.value() });
    }
    Ok(())
}

fn finish_single(
    rec: Recovery,
    primal: f64,
    dual_weights: Vec<f64>,
    tol: f64,
    eps: Prob,
    iterations: usize,
) -> Result<BetaResult> {
    let gap = primal - rec.dual_value;
    let feasible = rec.type_one <= eps.value() + FEAS_SLACK;
    Ok(BetaResult {
        beta: Prob::clamped(primal),
        test: Povm2::from_trusted(rec.test),
        dual_lambda: rec.lambda,
        dual_weights,
        gap,
        certified: gap <= tol && feasible,
        iterations,
    })
}

/// How the primal certificate `max_{σ ∈ S} Tr[Tσ]` is evaluated.
enum Certifier<'a> {
    /// Maximum over an explicit generator list.
    Vertices(&'a [MState]),
    /// Maximum over all computational-basis states: largest diagonal entry.
    Diagonal,
    /// Maximum over all states: largest eigenvalue of the test.
    AllStates,
}

impl Certifier<'_> {
    fn upper_bound(&self, rec: &Recovery) -> Result<f64> {
        match self {
            Certifier::Vertices(gens) => {
                let mut best = f64::NEG_INFINITY;
                for g in *gens {
                    best = best.max(rec.test.inner(g.mat())?);
                }
                Ok(best)
            }
            Certifier::Diagonal => {
                let a = rec.test.as_array();
                let mut best = f64::NEG_INFINITY;
                for i in 0..rec.test.dim() {
                    best = best.max(a[(i, i)].re);
                }
                Ok(best)
            }
            Certifier::AllStates => {
                // spectrum of T = P₊ + t P₀ is {1, t, 0}
                Ok(if rec.pos_count > 0 {
                    1.0
                } else if rec.ker_count > 0 {
                    rec.t_interp
                } else {
                    0.0
                })
            }
        }
    }
}

/// Minimax β over the convex hull of `vertices`, exact 1-D dual search for
/// two vertices.
fn minimax_two(
    rho_n: &MState,
    vertices: &[MState],
    eps: Prob,
    tol: f64,
    certifier: &Certifier,
) -> Result<BetaResult> {
    let sigma_of = |w: f64| -> HermitianMat {
        &vertices[0].mat().scale(w) + &vertices[1].mat().scale(1.0 - w)
    };
    let mut total_evals = 0usize;
    let mut lambda_hint = -1.0;
    let mut eval = |w: f64, hint: f64| -> Result<(f64, f64)> {
        let inst = NpInstance::new(rho_n, sigma_of(w), eps)?;
        let out = if hint > 0.0 {
            inst.maximize_dual_warm(hint)?
        } else {
            inst.maximize_dual()?
        };
        total_evals += inst.evals.get();
        Ok(out)
    };

    // golden-section max of the concave dual value in w
    let golden = 0.5 * (3.0 - 5.0f64.sqrt());
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = lo + golden * (hi - lo);
    let mut x2 = hi - golden * (hi - lo);
    let (l1, mut f1v) = eval(x1, -1.0)?;
    lambda_hint = l1;
    let (l2, mut f2v) = eval(x2, lambda_hint)?;
    lambda_hint = l2;
    for _ in 0..40 {
        if f1v >= f2v {
            hi = x2;
            x2 = x1;
            f2v = f1v;
            x1 = lo + golden * (hi - lo);
            let (l, f) = eval(x1, lambda_hint)?;
            lambda_hint = l;
            f1v = f;
        } else {
            lo = x1;
            x1 = x2;
            f1v = f2v;
            x2 = hi - golden * (hi - lo);
            let (l, f) = eval(x2, lambda_hint)?;
            lambda_hint = l;
            f2v = f;
        }
        if total_evals > EVAL_CAP {
            break;
        }
    }
    let (wbest, _) = if f1v >= f2v { (x1, f1v) } else { (x2, f2v) };

    // certified finish at the selected weights
    let inst = NpInstance::new(rho_n, sigma_of(wbest), eps)?;
    let (lambda, dual) = inst.maximize_dual_warm(lambda_hint)?;
    let rec = inst.recover(lambda)?;
    total_evals += inst.evals.get();
    let primal = certifier.upper_bound(&rec)?;
    let gap = primal - dual;
    let feasible = rec.type_one <= eps.value() + FEAS_SLACK;
    Ok(BetaResult {
        beta: Prob::clamped(primal),
        test: Povm2::from_trusted(rec.test),
        dual_lambda: lambda,
        dual_weights: vec![wbest, 1.0 - wbest],
        gap,
        certified: gap <= tol && feasible,
        iterations: total_evals,
    })
}

/// Minimax β over the hull of three or more vertices: supergradient ascent on
/// the joint concave dual `Φ(λ, w) = λ(1-ε) - Tr[(λρ - σ_w)₊]` with Polyak
/// steps against the best primal certificate, then a certified finish.
fn minimax_ascent(
    rho_n: &MState,
    vertices: &[MState],
    eps: Prob,
    tol: f64,
    certifier: &Certifier,
) -> Result<BetaResult> {
    let k = vertices.len();
    let dim = rho_n.dim();
    let one_minus_eps = 1.0 - eps.value();

    let sigma_of = |w: &[f64]| -> HermitianMat {
        let mut m = HermitianMat::zeros(dim);
        for (wi, v) in w.iter().zip(vertices) {
            if *wi > 0.0 {
                m = &m + &v.mat().scale(*wi);
            }
        }
        m
    };

    let mut w = vec![1.0 / k as f64; k];
    // initial multiplier from the uniform mixture
    let inst0 = NpInstance::new(rho_n, sigma_of(&w), eps)?;
    let (mut lambda, dual0) = inst0.maximize_dual()?;
    let mut total_evals = inst0.evals.get();
    let rec0 = inst0.recover(lambda)?;
    let primal0 = certifier.upper_bound(&rec0)?;
    let mut best = BestSoFar {
        dual: dual0,
        dual_lambda: lambda,
        dual_w: w.clone(),
        primal: primal0,
        rec: rec0,
    };

    let steps = (60 + 30 * k).min(400);
    for step in 0..steps {
        if total_evals > EVAL_CAP {
            break;
        }
        let inst = NpInstance::new(rho_n, sigma_of(&w), eps)?;
        let rec = inst.recover(lambda)?;
        total_evals += inst.evals.get();
        let phi = rec.dual_value;
        if phi > best.dual {
            best.dual = phi;
            best.dual_lambda = lambda;
            best.dual_w = w.clone();
        }
        let upper = certifier.upper_bound(&rec)?;
        let feasible = rec.type_one <= eps.value() + FEAS_SLACK;
        if feasible && upper < best.primal {
            best.primal = upper;
            best.rec = rec.clone();
        }
        if best.primal - best.dual <= tol {
            break;
        }

        // supergradient of Φ at (λ, w)
        let grad_lambda = one_minus_eps - rec.tr_t_rho;
        let mut grad_w = Vec::with_capacity(k);
        for v in vertices {
            grad_w.push(rec.test.inner(v.mat())?);
        }
        let norm_sq = grad_lambda * grad_lambda
            + grad_w.iter().map(|g| g * g).sum::<f64>();
        // Polyak step toward the best certificate
        let eta = ((best.primal - phi) / norm_sq.max(1e-12)).clamp(1e-6, 10.0);
        lambda = (lambda + eta * grad_lambda).max(0.0);
        for (wi, g) in w.iter_mut().zip(&grad_w) {
            *wi += eta * g;
        }
        project_simplex(&mut w);

        // re-center the multiplier now and then: the inner problem is cheap
        // to solve exactly and pulls the dual up
        if step % 20 == 19 {
            let inst = NpInstance::new(rho_n, sigma_of(&w), eps)?;
            let (l, g) = inst.maximize_dual_warm(lambda)?;
            total_evals += inst.evals.get();
            lambda = l;
            if g > best.dual {
                best.dual = g;
                best.dual_lambda = l;
                best.dual_w = w.clone();
            }
        }
    }

    // certified finish at the best dual weights
    let inst = NpInstance::new(rho_n, sigma_of(&best.dual_w), eps)?;
    let (lambda_fin, dual_fin) = inst.maximize_dual_warm(best.dual_lambda)?;
    let rec_fin = inst.recover(lambda_fin)?;
    total_evals += inst.evals.get();
    if dual_fin > best.dual {
        best.dual = dual_fin;
        best.dual_lambda = lambda_fin;
    }
    let upper_fin = certifier.upper_bound(&rec_fin)?;
    let feas_fin = rec_fin.type_one <= eps.value() + FEAS_SLACK;
    if feas_fin && upper_fin < best.primal {
        best.primal = upper_fin;
        best.rec = rec_fin;
    }

    let gap = best.primal - best.dual;
    let feasible = best.rec.type_one <= eps.value() + FEAS_SLACK;
    Ok(BetaResult {
        beta: Prob::clamped(best.primal),
        test: Povm2::from_trusted(best.rec.test),
        dual_lambda: best.dual_lambda,
        dual_weights: best.dual_w,
        gap,
        certified: gap <= tol && feasible,
        iterations: total_evals,
    })
}

struct BestSoFar {
    dual: f64,
    dual_lambda: f64,
    dual_w: Vec<f64>,
    primal: f64,
    rec: Recovery,
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(w: &mut [f64]) {
    let k = w.len();
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        acc += v;
        let candidate = (acc - 1.0) / (i + 1) as f64;
        if v - candidate > 0.0 {
            theta = candidate;
        }
    }
    let mut total = 0.0;
    for wi in w.iter_mut() {
        *wi = (*wi - theta).max(0.0);
        total += *wi;
    }
    if total > 0.0 {
        for wi in w.iter_mut() {
            *wi /= total;
        }
    } else {
        for wi in w.iter_mut() {
            *wi = 1.0 / k as f64;
        }
    }
}

/// `β_ε(ρ^⊗n ‖ S_n)` for a free-state theory.
pub fn beta_minimax(
    rho: &MState,
    theory: &FreeStateTheory,
    n: u32,
    eps: Prob,
    tol: f64,
) -> Result<BetaResult> {
    check_eps(eps)?;
    if rho.dim() != theory.base_dim() {
        return Err(Error::DimMismatch {
            left: rho.dim(),
            right: theory.base_dim(),
        });
    }
    let rho_n = rho.pow(n)?;
    match theory.kind() {
        TheoryKind::Singleton(s1) => {
            let sigma_n = s1.pow(n)?;
            np_beta(&rho_n, &sigma_n, eps, tol)
        }
        TheoryKind::FullSpace => {
            // the adversary can match ρ^⊗n itself, so the dual is anchored
            // there; the primal pays the worst case over all states, λ_max(T)
            let inst = NpInstance::new(&rho_n, rho_n.mat().clone(), eps)?;
            let (lambda, _) = inst.maximize_dual()?;
            let rec = inst.recover(lambda)?;
            let primal = Certifier::AllStates.upper_bound(&rec)?;
            finish_single(rec, primal, vec![1.0], tol, eps, inst.evals.get())
        }
        TheoryKind::Diagonal => {
            let d = theory.base_dim();
            let classes = type_classes(d, n);
            let vertices: Vec<MState> = classes
                .iter()
                .map(|idxs| {
                    let mut diag = vec![0.0; rho_n.dim()];
                    let share = 1.0 / idxs.len() as f64;
                    for &i in idxs {
                        diag[i] = share;
                    }
                    MState::from_trusted(HermitianMat::diag(&diag))
                })
                .collect();
            let mut out = if vertices.len() == 1 {
                // d = 1 corner: the only diagonal state is the full state
                np_beta(&rho_n, &vertices[0], eps, tol)
            } else if vertices.len() == 2 {
                minimax_two(&rho_n, &vertices, eps, tol, &Certifier::Diagonal)
            } else {
                minimax_ascent(&rho_n, &vertices, eps, tol, &Certifier::Diagonal)
            }?;
            // expand type-class weights to the basis-state generators
            let mut expanded = vec![0.0; rho_n.dim()];
            for (class, wc) in classes.iter().zip(&out.dual_weights) {
                let share = wc / class.len() as f64;
                for &i in class {
                    expanded[i] = share;
                }
            }
            out.dual_weights = expanded;
            Ok(out)
        }
        TheoryKind::Polytope { .. } => {
            let vertices = theory.free_generators(n)?;
            match vertices.len() {
                1 => np_beta(&rho_n, &vertices[0], eps, tol),
                2 => minimax_two(&rho_n, &vertices, eps, tol, &Certifier::Vertices(&vertices)),
                _ => minimax_ascent(&rho_n, &vertices, eps, tol, &Certifier::Vertices(&vertices)),
            }
        }
    }
}

/// Group the `d^n` basis indices of a tensor power by digit type class.
///
/// The adversary set of the diagonal theory is permutation invariant and the
/// null state is i.i.d., so an optimal adversary exists among type mixtures;
/// the certificate is still taken over every basis state.
fn type_classes(d: usize, n: u32) -> Vec<Vec<usize>> {
    use std::collections::BTreeMap;
    let total = d.pow(n);
    let mut classes: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for idx in 0..total {
        let mut counts = vec![0usize; d];
        let mut rem = idx;
        for _ in 0..n {
            counts[rem % d] += 1;
            rem /= d;
        }
        classes.entry(counts).or_default().push(idx);
    }
    classes.into_values().collect()
}

/// Grid-search upper bound on the qubit minimax β; an independent oracle.
///
/// Tests are parametrized as `T = U diag(a, b) U†` with `U` ranged over a
/// Bloch-sphere grid and `a, b` over `[0, 1]`. The worst-case error is
/// monotone in both `a` and `b`, so for each `(U, a)` the minimum over
/// feasible `b` sits on the feasibility frontier: the scan keeps the smallest
/// feasible grid `b` and the exact frontier point, both feasible, making the
/// result a true upper bound without the last grid-step bias.
pub fn beta_bruteforce(
    rho: &MState,
    generators: &[MState],
    eps: Prob,
    grid: usize,
) -> Result<f64> {
    if rho.dim() != 2 {
        return Err(Error::QubitOnly { dim: rho.dim() });
    }
    for g in generators {
        if g.dim() != 2 {
            return Err(Error::QubitOnly { dim: g.dim() });
        }
    }
    check_eps(eps)?;
    assert!(grid >= 2, "grid needs at least two points per parameter");
    let need = 1.0 - eps.value();

    let rho_a = rho.mat().as_array().clone();
    let gen_a: Vec<Array2<Complex64>> = generators
        .iter()
        .map(|g| g.mat().as_array().clone())
        .collect();

    let thetas: Vec<usize> = (0..grid).collect();
    let row_mins = parallel::map_collect(thetas, move |it| {
        let theta = std::f64::consts::PI * it as f64 / (grid - 1) as f64;
        let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let mut best = f64::INFINITY;
        for ip in 0..grid {
            let phi = 2.0 * std::f64::consts::PI * ip as f64 / grid as f64;
            let v0 = Complex64::new(ct, 0.0);
            let v1 = Complex64::new(phi.cos() * st, phi.sin() * st);
            // r = <v|ρ|v>, s_i = <v|σ_i|v>
            let quad = |m: &Array2<Complex64>| -> f64 {
                (v0.conj() * (m[(0, 0)] * v0 + m[(0, 1)] * v1)
                    + v1.conj() * (m[(1, 0)] * v0 + m[(1, 1)] * v1))
                    .re
            };
            let r = quad(&rho_a).clamp(0.0, 1.0);
            let s: Vec<f64> = gen_a.iter().map(|g| quad(g).clamp(0.0, 1.0)).collect();

            let value = |a: f64, b: f64| -> f64 {
                s.iter()
                    .map(|si| a * si + b * (1.0 - si))
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            for ia in 0..grid {
                let a = ia as f64 / (grid - 1) as f64;
                let rest = need - a * r;
                if rest <= 0.0 {
                    // already feasible with b = 0
                    best = best.min(value(a, 0.0));
                    continue;
                }
                let denom = 1.0 - r;
                if denom <= 1e-15 {
                    continue; // no b can help
                }
                let b_exact = rest / denom;
                if b_exact > 1.0 {
                    continue; // infeasible at this a
                }
                best = best.min(value(a, b_exact));
                let ib = (b_exact * (grid - 1) as f64).ceil() as usize;
                if ib < grid {
                    best = best.min(value(a, ib as f64 / (grid - 1) as f64));
                }
            }
        }
        best
    });
    Ok(row_mins.into_iter().fold(f64::INFINITY, f64::min))
}

/// One row of the hypothesis-testing scan.
#[derive(Clone, Debug)]
pub struct SteinRow {
    pub n: u32,
    pub beta: Prob,
    /// `-log(β)/n`; `∞` when β underflows to zero.
    pub b_n: XNNReal,
    pub gap: f64,
    pub certified: bool,
}

/// Compute `β_ε(ρ^⊗n ‖ S_n)` and its exponent for `n = 1..=n_max`.
/// Rows are independent and evaluated in parallel; output is ordered by `n`.
pub fn stein_scan(
    rho: &MState,
    theory: &FreeStateTheory,
    eps: Prob,
    n_max: u32,
    tol: f64,
) -> Result<Vec<SteinRow>> {
    theory.level_dim(n_max)?;
    let ns: Vec<u32> = (1..=n_max).collect();
    let rows = parallel::map_collect(ns, |n| -> Result<SteinRow> {
        let res = beta_minimax(rho, theory, n, eps, tol)?;
        let beta = res.beta.value();
        let b_n = if beta <= 0.0 {
            XNNReal::Infinity
        } else {
            XNNReal::from_clamped(-beta.ln() / n as f64)
        };
        Ok(SteinRow {
            n,
            beta: res.beta,
            b_n,
            gap: res.gap,
            certified: res.certified,
        })
    });
    rows.into_iter().collect()
}
