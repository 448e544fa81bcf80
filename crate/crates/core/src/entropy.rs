//! Entropies with extended-real semantics, pinching maps, and the Fréchet
//! derivative used by the free-set minimizer.
//!
//! The relative entropy follows the textbook case split: finite
//! `Tr[ρ(log ρ - log σ)]` when `supp(ρ) ⊆ supp(σ)`, `∞` otherwise. The
//! support test is made robust to floating point by treating σ-eigenvalues
//! below `SUPPORT_TOL · λ_max(σ)` as kernel and firing the infinite branch
//! when the kernel overlap with ρ exceeds `SUPPORT_TOL`.
//!
//! All logarithms are natural.

use crate::error::{Error, Result};
use crate::herm::HermitianMat;
use crate::state::MState;
use crate::xreal::XNNReal;
use ndarray::Array2;
use num_complex::Complex64;

/// Relative support threshold for the `supp(ρ) ⊆ supp(σ)` test.
pub const SUPPORT_TOL: f64 = 1e-10;
/// Default relative tolerance for merging eigenvalues into pinching blocks.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Minimum eigenvalue of σ accepted by the gradient (full-rank requirement).
pub const GRAD_FLOOR: f64 = 1e-9;

/// Von Neumann entropy `-Σ λ log λ` with `0 log 0 = 0`; in `[0, log d]`.
pub fn vn_entropy(rho: &MState) -> Result<f64> {
    let evs = rho.mat().eigvalsh()?;
    let s: f64 = -evs
        .iter()
        .map(|&x| if x <= 0.0 { 0.0 } else { x * x.ln() })
        .sum::<f64>();
    Ok(s.max(0.0))
}

/// Quantum relative entropy `D(ρ‖σ)` in `[0, ∞]`.
pub fn rel_entropy(rho: &MState, sigma: &MState) -> Result<XNNReal> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let spec_sigma = sigma.mat().eigh()?;
    let lam_max = *spec_sigma.values.last().expect("nonempty spectrum");
    let kernel_cut = SUPPORT_TOL * lam_max;

    // kernel overlap Tr[P_ker(σ) ρ]
    let mut kernel_overlap = 0.0;
    for (j, &s) in spec_sigma.values.iter().enumerate() {
        if s <= kernel_cut {
            kernel_overlap += spec_sigma.expectation(j, rho.mat());
        }
    }
    if kernel_overlap > SUPPORT_TOL {
        return Ok(XNNReal::Infinity);
    }

    // Tr[ρ log ρ]
    let rho_evs = rho.mat().eigvalsh()?;
    let tr_rho_log_rho: f64 = rho_evs
        .iter()
        .map(|&x| if x <= 0.0 { 0.0 } else { x * x.ln() })
        .sum();

    // Tr[ρ log σ] over the support of σ (log 0 = 0 on the kernel)
    let mut tr_rho_log_sigma = 0.0;
    for (j, &s) in spec_sigma.values.iter().enumerate() {
        if s > kernel_cut {
            tr_rho_log_sigma += spec_sigma.expectation(j, rho.mat()) * s.ln();
        }
    }

    Ok(XNNReal::from_clamped(tr_rho_log_rho - tr_rho_log_sigma))
}

/// Sandwiched Rényi divergence
/// `D̃_α = (α-1)⁻¹ log Tr[(σ^{(1-α)/2α} ρ σ^{(1-α)/2α})^α]`
/// for `α ∈ (0,1) ∪ (1,∞)`, with powers taken on the support of σ.
///
/// `∞` when `α > 1` and `supp(ρ) ⊄ supp(σ)`, and when the sandwiched operator
/// vanishes for `α < 1` (orthogonal states).
pub fn sandwiched_renyi(alpha: f64, rho: &MState, sigma: &MState) -> Result<XNNReal> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidAlpha { alpha });
    }
    if alpha == 1.0 {
        return Err(Error::AlphaOne);
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }

    let spec_sigma = sigma.mat().eigh()?;
    let lam_max = *spec_sigma.values.last().expect("nonempty spectrum");
    let kernel_cut = SUPPORT_TOL * lam_max;

    if alpha > 1.0 {
        let mut kernel_overlap = 0.0;
        for (j, &s) in spec_sigma.values.iter().enumerate() {
            if s <= kernel_cut {
                kernel_overlap += spec_sigma.expectation(j, rho.mat());
            }
        }
        if kernel_overlap > SUPPORT_TOL {
            return Ok(XNNReal::Infinity);
        }
    }

    let q = (1.0 - alpha) / (2.0 * alpha);
    let sigma_q = spec_sigma.apply(|s| if s <= kernel_cut { 0.0 } else { s.powf(q) });
    let sandwich = rho.mat().conj_by(sigma_q.as_array())?;
    let tr_term: f64 = sandwich
        .eigvalsh()?
        .iter()
        .map(|&x| if x <= 0.0 { 0.0 } else { x.powf(alpha) })
        .sum();

    if tr_term < 1e-300 {
        // vanishing sandwich: orthogonal supports
        return Ok(if alpha < 1.0 {
            XNNReal::Infinity
        } else {
            XNNReal::ZERO
        });
    }
    Ok(XNNReal::from_clamped(tr_term.ln() / (alpha - 1.0)))
}

/// The pinching channel of a state: orthogonal projectors onto its
/// eigenvalue clusters.
#[derive(Clone, Debug)]
pub struct PinchingMap {
    projectors: Vec<HermitianMat>,
}

impl PinchingMap {
    /// Number of blocks `v(σ)`; between 1 and d.
    pub fn block_count(&self) -> usize {
        self.projectors.len()
    }

    pub fn projectors(&self) -> &[HermitianMat] {
        &self.projectors
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    /// `E(ρ) = Σ_j P_j ρ P_j`.
    pub fn pinch(&self, rho: &MState) -> Result<MState> {
        Ok(MState::from_trusted(self.pinch_herm(rho.mat())?))
    }

    /// Pinch an arbitrary Hermitian matrix.
    pub fn pinch_herm(&self, h: &HermitianMat) -> Result<HermitianMat> {
        if h.dim() != self.dim() {
            return Err(Error::DimMismatch {
                left: h.dim(),
                right: self.dim(),
            });
        }
        let mut acc = HermitianMat::zeros(h.dim());
        for p in &self.projectors {
            acc = &acc + &h.conj_by(p.as_array())?;
        }
        Ok(acc)
    }

    /// Check orthogonality `P_j P_k = δ_jk P_j` and completeness `Σ P_j = I`.
    pub fn verify(&self, tol: f64) -> Result<()> {
        let d = self.dim();
        let mut sum = HermitianMat::zeros(d);
        for p in &self.projectors {
            sum = &sum + p;
        }
        let comp_err = (&sum - &HermitianMat::identity(d)).frob_norm();
        if comp_err > tol {
            return Err(Error::NotHermitian {
                asymmetry: comp_err,
                tol,
            });
        }
        for (j, pj) in self.projectors.iter().enumerate() {
            for (k, pk) in self.projectors.iter().enumerate() {
                let prod = pj.as_array().dot(pk.as_array());
                let target = if j == k {
                    pj.as_array().clone()
                } else {
                    Array2::<Complex64>::zeros((d, d))
                };
                let err: f64 = (&prod - &target)
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if err > tol {
                    return Err(Error::NotHermitian {
                        asymmetry: err,
                        tol,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Pinching map of σ: eigenvalues within `cluster_tol · max(1, ‖σ‖_F)` of each
/// other merge into one block.
pub fn pinching_of(sigma: &MState, cluster_tol: f64) -> Result<PinchingMap> {
    let spec = sigma.mat().eigh()?;
    let threshold = cluster_tol * sigma.mat().frob_norm().max(1.0);
    let d = spec.dim();
    let mut projectors = Vec::new();
    let mut block: Vec<usize> = vec![0];
    for j in 1..d {
        if spec.values[j] - spec.values[j - 1] > threshold {
            projectors.push(spec.projector(&block));
            block = Vec::new();
        }
        block.push(j);
    }
    projectors.push(spec.projector(&block));
    Ok(PinchingMap { projectors })
}

/// Fréchet derivative of `σ ↦ D(ρ‖σ)` at full-rank σ.
///
/// In σ's eigenbasis the matrix is `G_ij = -ρ̃_ij φ(s_i, s_j)` with the
/// log divided difference `φ(a,b) = (log a - log b)/(a - b)`, `φ(a,a) = 1/a`.
/// Satisfies `<G, Δ> = d/dt D(ρ‖σ+tΔ)|₀` for traceless Hermitian Δ.
pub fn rel_entropy_grad_sigma(rho: &MState, sigma: &MState) -> Result<HermitianMat> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            left: rho.dim(),
            right: sigma.dim(),
        });
    }
    let spec = sigma.mat().eigh()?;
    let s = &spec.values;
    if s[0] <= GRAD_FLOOR {
        return Err(Error::RankDeficient {
            min_eigenvalue: s[0],
        });
    }
    let d = rho.dim();
    // ρ in σ's eigenbasis: U† ρ U
    let u = &spec.vectors;
    let udag = crate::herm::conj_transpose(u);
    let rho_tilde = udag.dot(rho.mat().as_array()).dot(u);

    let mut g_tilde = Array2::<Complex64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            let (a, b) = (s[i], s[j]);
            // switch to the symmetric mean before the divided difference
            // loses precision
            let phi = if (a - b).abs() <= 1e-7 * a.max(b) {
                2.0 / (a + b)
            } else {
                (a.ln() - b.ln()) / (a - b)
            };
            g_tilde[(i, j)] = -rho_tilde[(i, j)] * phi;
        }
    }
    let g = u.dot(&g_tilde).dot(&udag);
    Ok(HermitianMat::from_hermitian_parts(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{Factor, Ket};

    const INF: XNNReal = XNNReal::Infinity;

    fn xval(x: XNNReal) -> f64 {
        x.to_finite().expect("finite entropy expected")
    }

    #[test]
    fn vn_entropy_reference_values() {
        let pure = MState::pure(&Ket::random(3, 1));
        assert!(vn_entropy(&pure).unwrap() < 1e-9);

        for d in [2usize, 3, 5] {
            let mm = MState::maximally_mixed(d);
            assert!((vn_entropy(&mm).unwrap() - (d as f64).ln()).abs() < 1e-12);
        }

        // -(3/4 log 3/4 + 1/4 log 1/4)
        let m = MState::new(HermitianMat::diag(&[0.75, 0.25])).unwrap();
        assert!((vn_entropy(&m).unwrap() - 0.5623351446188083).abs() < 1e-12);
    }

    #[test]
    fn rel_entropy_reference_values() {
        let rho = MState::random(3, 2);
        assert!(xval(rel_entropy(&rho, &rho).unwrap()) < 1e-9);

        let zero = MState::pure(&Ket::basis(2, 0));
        let one = MState::pure(&Ket::basis(2, 1));
        assert_eq!(rel_entropy(&zero, &one).unwrap(), INF);

        let mixed = MState::maximally_mixed(2);
        let d = xval(rel_entropy(&zero, &mixed).unwrap());
        assert!((d - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn rel_entropy_zero_iff_equal() {
        let rho = MState::random(3, 5);
        let sigma = MState::random(3, 6);
        assert!(xval(rel_entropy(&rho, &sigma).unwrap()) > 1e-4);
    }

    #[test]
    fn lower_semicontinuity_witness() {
        // σ_k = (1-1/k)|1><1| + (1/k)|0><0| has D(|0><0| ‖ σ_k) = log k,
        // unbounded, while the k→∞ limit state gives ∞.
        let rho = MState::pure(&Ket::basis(2, 0));
        for k in [10.0, 100.0, 1000.0] {
            let sk = MState::new(HermitianMat::diag(&[1.0 / k, 1.0 - 1.0 / k])).unwrap();
            let d = xval(rel_entropy(&rho, &sk).unwrap());
            assert!((d - k.ln()).abs() < 1e-9, "D = log k at k={k}");
        }
        let limit = MState::pure(&Ket::basis(2, 1));
        assert_eq!(rel_entropy(&rho, &limit).unwrap(), INF);
    }

    #[test]
    fn sandwiched_matches_classical_on_commuting_pairs() {
        let (p, q) = (0.7, 0.4);
        let rho = MState::new(HermitianMat::diag(&[p, 1.0 - p])).unwrap();
        let sigma = MState::new(HermitianMat::diag(&[q, 1.0 - q])).unwrap();
        for alpha in [0.3, 0.7, 1.5, 2.0, 5.0] {
            let classical = ((p.powf(alpha) * q.powf(1.0 - alpha)
                + (1.0 - p).powf(alpha) * (1.0 - q).powf(1.0 - alpha))
            .ln())
                / (alpha - 1.0);
            let got = xval(sandwiched_renyi(alpha, &rho, &sigma).unwrap());
            assert!(
                (got - classical).abs() < 1e-10,
                "alpha={alpha}: {got} vs classical {classical}"
            );
        }
    }

    #[test]
    fn sandwiched_vanishes_on_equal_states() {
        let rho = MState::random(3, 8);
        assert!(xval(sandwiched_renyi(2.0, &rho, &rho).unwrap()).abs() < 1e-9);
        assert!(xval(sandwiched_renyi(0.5, &rho, &rho).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn sandwiched_alpha_edge_cases() {
        let rho = MState::random(2, 1);
        let sigma = MState::random(2, 2);
        assert!(matches!(
            sandwiched_renyi(1.0, &rho, &sigma),
            Err(Error::AlphaOne)
        ));
        assert!(matches!(
            sandwiched_renyi(-0.3, &rho, &sigma),
            Err(Error::InvalidAlpha { .. })
        ));
        assert!(matches!(
            sandwiched_renyi(0.0, &rho, &sigma),
            Err(Error::InvalidAlpha { .. })
        ));

        // support mismatch at α > 1 is the infinite branch
        let zero = MState::pure(&Ket::basis(2, 0));
        let one = MState::pure(&Ket::basis(2, 1));
        assert_eq!(sandwiched_renyi(2.0, &zero, &one).unwrap(), INF);
        assert_eq!(sandwiched_renyi(0.5, &zero, &one).unwrap(), INF);
    }

    #[test]
    fn sandwiched_converges_to_rel_entropy() {
        for seed in 0..5 {
            let rho = MState::random(3, seed);
            let sigma = MState::random(3, seed + 40);
            let d = xval(rel_entropy(&rho, &sigma).unwrap());
            for alpha in [1.0 - 1e-5, 1.0 + 1e-5] {
                let da = xval(sandwiched_renyi(alpha, &rho, &sigma).unwrap());
                assert!(
                    (da - d).abs() < 1e-4,
                    "alpha={alpha}: D̃={da} vs D={d} (seed {seed})"
                );
            }
        }
    }

    #[test]
    fn pinching_block_counts() {
        let v1 = pinching_of(&MState::maximally_mixed(4), CLUSTER_TOL).unwrap();
        assert_eq!(v1.block_count(), 1);
        assert!((&v1.projectors()[0] - &HermitianMat::identity(4)).frob_norm() < 1e-9);

        let sigma = MState::new(HermitianMat::diag(&[0.5, 0.3, 0.2])).unwrap();
        let v3 = pinching_of(&sigma, CLUSTER_TOL).unwrap();
        assert_eq!(v3.block_count(), 3);
        for p in v3.projectors() {
            assert!((p.trace() - 1.0).abs() < 1e-9, "rank-1 blocks");
        }

        let degenerate = MState::new(HermitianMat::diag(&[0.4, 0.4, 0.2])).unwrap();
        assert_eq!(pinching_of(&degenerate, 1e-9).unwrap().block_count(), 2);
    }

    #[test]
    fn pinch_basics() {
        let rho = MState::random(3, 3);
        let trivial = pinching_of(&MState::maximally_mixed(3), CLUSTER_TOL).unwrap();
        let out = trivial.pinch(&rho).unwrap();
        assert!((out.mat() - rho.mat()).frob_norm() < 1e-9, "v=1 pinch is identity");

        // nondegenerate diagonal σ zeroes off-diagonals
        let sigma = MState::new(HermitianMat::diag(&[0.5, 0.3, 0.2])).unwrap();
        let e = pinching_of(&sigma, CLUSTER_TOL).unwrap();
        let pinched = e.pinch(&rho).unwrap();
        assert!((pinched.mat() - rho.dephased().mat()).frob_norm() < 1e-9);

        // idempotence
        let twice = e.pinch(&pinched).unwrap();
        assert!((twice.mat() - pinched.mat()).frob_norm() < 1e-10);

        e.verify(1e-9).unwrap();
    }

    #[test]
    fn pinching_inequality_random_qutrits() {
        for seed in 0..10 {
            let rho = MState::random(3, seed);
            let sigma = MState::random(3, seed + 90);
            let e = pinching_of(&sigma, CLUSTER_TOL).unwrap();
            let v = e.block_count() as f64;
            let pinched = e.pinch(&rho).unwrap();
            let scaled = pinched.mat().scale(v);
            assert!(
                rho.mat().loewner_le(&scaled, 1e-9).unwrap(),
                "ρ ≤ v E_σ(ρ) failed at seed {seed}"
            );
        }
    }

    #[test]
    fn pinch_dimension_mismatch() {
        let sigma = MState::random(3, 1);
        let e = pinching_of(&sigma, CLUSTER_TOL).unwrap();
        assert!(e.pinch(&MState::random(2, 2)).is_err());
    }

    #[test]
    fn grad_at_maximally_mixed_is_minus_identity() {
        let mm = MState::maximally_mixed(3);
        let g = rel_entropy_grad_sigma(&mm, &mm).unwrap();
        assert!((&g - &HermitianMat::identity(3).scale(-1.0)).frob_norm() < 1e-9);
    }

    #[test]
    fn grad_commuting_reduces_to_ratio() {
        let rho = MState::new(HermitianMat::diag(&[0.7, 0.3])).unwrap();
        let sigma = MState::new(HermitianMat::diag(&[0.4, 0.6])).unwrap();
        let g = rel_entropy_grad_sigma(&rho, &sigma).unwrap();
        assert!((g.as_array()[(0, 0)].re + 0.7 / 0.4).abs() < 1e-9);
        assert!((g.as_array()[(1, 1)].re + 0.3 / 0.6).abs() < 1e-9);
    }

    #[test]
    fn grad_matches_central_differences() {
        for seed in 0..6 {
            let rho = MState::random(3, seed);
            let sigma = MState::random(3, seed + 21);
            let g = rel_entropy_grad_sigma(&rho, &sigma).unwrap();

            // traceless Hermitian direction
            let mut delta = HermitianMat::random(3, seed + 77);
            let tr = delta.trace() / 3.0;
            delta = &delta - &HermitianMat::identity(3).scale(tr);
            let delta = delta.scale(1.0 / delta.frob_norm());

            let h = 1e-5;
            let eval = |t: f64| -> f64 {
                let m = &(sigma.mat().clone()) + &delta.scale(t);
                let st = MState::new(m).expect("perturbed state stays valid");
                rel_entropy(&rho, &st).unwrap().to_finite().unwrap()
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let lin = g.inner(&delta).unwrap();
            assert!(
                (fd - lin).abs() <= 1e-5 * fd.abs().max(lin.abs()).max(1.0),
                "seed {seed}: fd {fd} vs <G,Δ> {lin}"
            );
        }
    }

    #[test]
    fn grad_rejects_rank_deficient_sigma() {
        let rho = MState::maximally_mixed(2);
        let sigma = MState::pure(&Ket::basis(2, 0));
        assert!(matches!(
            rel_entropy_grad_sigma(&rho, &sigma),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn additivity_including_infinite_branch() {
        let r1 = MState::random(2, 50);
        let r2 = MState::random(2, 51);
        let s1 = MState::random(2, 52);
        let s2 = MState::random(2, 53);
        let joint = xval(rel_entropy(&r1.tensor(&r2), &s1.tensor(&s2)).unwrap());
        let sum = rel_entropy(&r1, &s1).unwrap() + rel_entropy(&r2, &s2).unwrap();
        assert!((joint - xval(sum)).abs() < 1e-8);

        // one infinite factor makes the tensor pair infinite, matching xadd
        let zero = MState::pure(&Ket::basis(2, 0));
        let one = MState::pure(&Ket::basis(2, 1));
        let lhs = rel_entropy(&r1.tensor(&zero), &s1.tensor(&one)).unwrap();
        let rhs = rel_entropy(&r1, &s1).unwrap() + rel_entropy(&zero, &one).unwrap();
        assert_eq!(lhs, INF);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn dpi_and_pythagoras() {
        for seed in 0..6 {
            let rho = MState::random(3, seed);
            let sigma = MState::random(3, seed + 33);
            let d = xval(rel_entropy(&rho, &sigma).unwrap());

            let e = pinching_of(&sigma, CLUSTER_TOL).unwrap();
            let (pr, ps) = (e.pinch(&rho).unwrap(), e.pinch(&sigma).unwrap());
            let d_pinched = xval(rel_entropy(&pr, &ps).unwrap());
            assert!(d_pinched <= d + 1e-9, "pinching DPI at seed {seed}");

            // Pythagoras: D(ρ‖σ) = D(ρ‖E_σ(ρ)) + D(E_σ(ρ)‖σ)
            let mid = xval(rel_entropy(&rho, &pr).unwrap());
            let tail = xval(rel_entropy(&pr, &sigma).unwrap());
            assert!(
                (d - (mid + tail)).abs() < 1e-8,
                "pinching Pythagoras at seed {seed}: {d} vs {mid}+{tail}"
            );

            // DPI under a joint partial trace
            let tau = MState::random(2, seed + 66);
            let big_r = rho.tensor(&tau);
            let big_s = sigma.tensor(&tau);
            let dr = xval(rel_entropy(&big_r, &big_s).unwrap());
            let tr_r = big_r.partial_trace(Factor::First, (3, 2)).unwrap();
            let tr_s = big_s.partial_trace(Factor::First, (3, 2)).unwrap();
            let dt = xval(rel_entropy(&tr_r, &tr_s).unwrap());
            assert!(dt <= dr + 1e-9, "partial-trace DPI at seed {seed}");
        }
    }

    #[test]
    fn operator_bound_controls_entropy() {
        // ρ ≤ 2σ with σ = (ρ+τ)/2 gives D(ρ‖σ) ≤ log 2
        for seed in 0..6 {
            let rho = MState::random(3, seed);
            let tau = MState::random(3, seed + 44);
            let sigma = MState::clamped(
                &rho.mat().scale(0.5) + &tau.mat().scale(0.5),
            )
            .unwrap();
            assert!(rho
                .mat()
                .loewner_le(&sigma.mat().scale(2.0), 1e-9)
                .unwrap());
            let d = xval(rel_entropy(&rho, &sigma).unwrap());
            assert!(d <= std::f64::consts::LN_2 + 1e-8, "seed {seed}: D={d}");
        }
    }
}
