//! Quantum states: normalized kets and density matrices.
//!
//! An [`MState`] wraps a PSD, unit-trace [`HermitianMat`]. Validating
//! constructors are used at the boundary (files, user input, test data);
//! operations that preserve the invariants structurally (tensor products,
//! powers, partial traces, pinching) construct their results directly.
//!
//! Composite indices are row-major throughout: `i = i1 * d2 + i2`. With this
//! fixed convention the tensor associator is the identity on flattened data.

use crate::error::{Error, Result};
use crate::herm::{HermitianMat, DIM_CAP};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::de;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Normalization tolerance for kets.
pub const KET_NORM_TOL: f64 = 1e-12;
/// PSD slack and trace tolerance for states.
pub const STATE_TOL: f64 = 1e-10;

/// A pure state vector with unit norm.
#[derive(Clone, Debug)]
pub struct Ket {
    amp: Array1<Complex64>,
}

impl Ket {
    /// Wrap amplitudes that are already normalized within `KET_NORM_TOL`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let amp = Array1::from(amplitudes);
        let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > KET_NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Ket { amp })
    }

    /// Normalize arbitrary amplitudes; rejects the zero vector.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let mut amp = Array1::from(amplitudes);
        let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::NotNormalized { norm });
        }
        amp.mapv_inplace(|z| z / norm);
        Ok(Ket { amp })
    }

    /// Computational basis vector `|i>`.
    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim);
        let mut amp = Array1::zeros(dim);
        amp[i] = Complex64::new(1.0, 0.0);
        Ket { amp }
    }

    /// Qubit `|+> = (|0> + |1>)/sqrt(2)`.
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Ket {
            amp: Array1::from(vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)]),
        }
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amp
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Ket) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(self
            .amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Tensor product, row-major index convention.
    pub fn tensor(&self, other: &Ket) -> Ket {
        let (d1, d2) = (self.dim(), other.dim());
        let mut amp = Array1::zeros(d1 * d2);
        for i in 0..d1 {
            for j in 0..d2 {
                amp[i * d2 + j] = self.amp[i] * other.amp[j];
            }
        }
        Ket { amp }
    }

    /// A Haar-ish random ket (normalized complex Gaussian), seeded.
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amp: Vec<Complex64> = (0..dim)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        Ket::normalized(amp).expect("gaussian vector is nonzero a.s.")
    }
}

/// A density matrix: PSD with unit trace.
#[derive(Clone, Debug)]
pub struct MState {
    m: HermitianMat,
}

impl MState {
    /// Strict constructor: checks `λ_min >= -STATE_TOL` and `|Tr - 1| <= STATE_TOL`.
    pub fn new(m: HermitianMat) -> Result<Self> {
        let tr = m.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidTrace { trace: tr });
        }
        let evs = m.eigvalsh()?;
        if evs[0] < -STATE_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: evs[0],
            });
        }
        Ok(MState { m })
    }

    /// Clamping constructor for states produced by long pipelines: negative
    /// eigenvalues are projected to zero and the trace renormalized.
    pub fn clamped(m: HermitianMat) -> Result<Self> {
        let spec = m.eigh()?;
        let clamped = spec.apply(|x| x.max(0.0));
        let tr = clamped.trace();
        if tr < 1e-300 {
            return Err(Error::InvalidTrace { trace: tr });
        }
        Ok(MState {
            m: clamped.scale(1.0 / tr),
        })
    }

    /// Internal: wrap a matrix that is PSD and unit-trace by construction.
    pub(crate) fn from_trusted(m: HermitianMat) -> Self {
        debug_assert!((m.trace() - 1.0).abs() < 1e-6, "trusted state trace drift");
        MState { m }
    }

    /// Rank-1 projector `|ψ><ψ|`.
    pub fn pure(psi: &Ket) -> Self {
        let d = psi.dim();
        let mut m = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = psi.amp[i] * psi.amp[j].conj();
            }
        }
        MState {
            m: HermitianMat::from_hermitian_parts(m),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        MState {
            m: HermitianMat::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// Hilbert-Schmidt-style random full-rank state `G G† / Tr[G G†]`,
    /// deterministic in the seed.
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut g = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                g[(i, j)] = Complex64::new(re, im);
            }
        }
        let gdag = crate::herm::conj_transpose(&g);
        let ggdag = g.dot(&gdag);
        let m = HermitianMat::from_hermitian_parts(ggdag);
        let tr = m.trace();
        MState {
            m: m.scale(1.0 / tr),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn mat(&self) -> &HermitianMat {
        &self.m
    }

    pub fn into_mat(self) -> HermitianMat {
        self.m
    }

    /// Tensor product of two states.
    pub fn tensor(&self, other: &MState) -> MState {
        MState {
            m: self.m.kron(&other.m),
        }
    }

    /// `n`-fold tensor power; dimension `d^n` must stay within [`DIM_CAP`].
    pub fn pow(&self, n: u32) -> Result<MState> {
        assert!(n >= 1, "tensor power needs n >= 1");
        let d = self.dim();
        let requested = d.checked_pow(n).unwrap_or(usize::MAX);
        if requested > DIM_CAP {
            return Err(Error::DimensionCap {
                requested,
                cap: DIM_CAP,
            });
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        Ok(out)
    }

    /// State after dephasing in the computational basis (off-diagonals zeroed).
    pub fn dephased(&self) -> MState {
        let d = self.dim();
        let mut diag = vec![0.0; d];
        for i in 0..d {
            diag[i] = self.m.as_array()[(i, i)].re;
        }
        MState {
            m: HermitianMat::diag(&diag),
        }
    }

    /// Trace out one tensor factor of a bipartite state with dims `(d1, d2)`.
    pub fn partial_trace(&self, keep: Factor, dims: (usize, usize)) -> Result<MState> {
        let (d1, d2) = dims;
        if d1 * d2 != self.dim() {
            return Err(Error::BadFactorization {
                d1,
                d2,
                dim: self.dim(),
            });
        }
        let a = self.m.as_array();
        let m = match keep {
            Factor::First => {
                let mut out = Array2::zeros((d1, d1));
                for i in 0..d1 {
                    for j in 0..d1 {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for k in 0..d2 {
                            acc += a[(i * d2 + k, j * d2 + k)];
                        }
                        out[(i, j)] = acc;
                    }
                }
                out
            }
            Factor::Second => {
                let mut out = Array2::zeros((d2, d2));
                for i in 0..d2 {
                    for j in 0..d2 {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for k in 0..d1 {
                            acc += a[(k * d2 + i, k * d2 + j)];
                        }
                        out[(i, j)] = acc;
                    }
                }
                out
            }
        };
        Ok(MState {
            m: HermitianMat::from_hermitian_parts(m),
        })
    }

    /// Trace distance `½ ||ρ - σ||₁`, clamped into `[0, 1]`.
    pub fn trace_distance(&self, other: &MState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let diff = &self.m - &other.m;
        Ok((0.5 * diff.trace_norm()?).clamp(0.0, 1.0))
    }

    /// Smallest eigenvalue; convenience for rank checks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.m.eigvalsh()?[0])
    }
}

/// Which tensor factor to keep in a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(flatten)]
    matrix: crate::herm::MatrixJson,
}

impl Serialize for MState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateJson {
            kind: Some("mstate".to_string()),
            matrix: crate::herm::MatrixJson::of(&self.m),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = StateJson::deserialize(d)?;
        if let Some(kind) = &raw.kind {
            if kind != "mstate" {
                return Err(de::Error::custom(format!(
                    "expected kind \"mstate\", got {kind:?}"
                )));
            }
        }
        let m = raw.matrix.decode().map_err(de::Error::custom)?;
        MState::new(m).map_err(de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct KetJson {
    dim: usize,
    amplitudes: Vec<(f64, f64)>,
}

impl Serialize for Ket {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KetJson {
            dim: self.dim(),
            amplitudes: self.amp.iter().map(|z| (z.re, z.im)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ket {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = KetJson::deserialize(d)?;
        if raw.amplitudes.len() != raw.dim {
            return Err(de::Error::custom("amplitude count does not match dim"));
        }
        Ket::new(
            raw.amplitudes
                .iter()
                .map(|&(re, im)| Complex64::new(re, im))
                .collect(),
        )
        .map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_projectors() {
        let zero = MState::pure(&Ket::basis(2, 0));
        assert!((&zero.into_mat() - &HermitianMat::diag(&[1.0, 0.0])).frob_norm() < 1e-14);

        let plus = MState::pure(&Ket::plus());
        for i in 0..2 {
            for j in 0..2 {
                assert!((plus.mat().as_array()[(i, j)].re - 0.5).abs() < 1e-14);
            }
        }
        // idempotence
        let sq = plus.mat().as_array().dot(plus.mat().as_array());
        let err: f64 = (&sq - plus.mat().as_array())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10);
    }

    #[test]
    fn purity_overlap_identity() {
        for seed in 0..8 {
            let psi = Ket::random(3, seed);
            let phi = Ket::random(3, seed + 70);
            let overlap = psi.overlap(&phi).unwrap().norm_sqr();
            let tr = MState::pure(&psi)
                .mat()
                .inner(MState::pure(&phi).mat())
                .unwrap();
            assert!((tr - overlap).abs() < 1e-12, "Tr[ψψ·φφ] = |<ψ|φ>|²");
        }
    }

    #[test]
    fn tensor_of_pure_is_pure_of_tensor() {
        let psi = Ket::random(2, 1);
        let phi = Ket::random(3, 2);
        let lhs = MState::pure(&psi).tensor(&MState::pure(&phi));
        let rhs = MState::pure(&psi.tensor(&phi));
        assert!((lhs.mat() - rhs.mat()).frob_norm() < 1e-12);
        assert!((lhs.mat().trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tensor_with_mixed_scales_spectrum() {
        let rho = MState::random(2, 9);
        let t = rho.tensor(&MState::maximally_mixed(3));
        let mut expect: Vec<f64> = rho
            .mat()
            .eigvalsh()
            .unwrap()
            .iter()
            .flat_map(|x| std::iter::repeat(x / 3.0).take(3))
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let got = t.mat().eigvalsh().unwrap();
        for (e, g) in expect.iter().zip(got.iter()) {
            assert!((e - g).abs() < 1e-12);
        }
    }

    #[test]
    fn pow_basics_and_cap() {
        let rho = MState::random(2, 3);
        let p1 = rho.pow(1).unwrap();
        assert!((p1.mat() - rho.mat()).frob_norm() < 1e-15);

        let mm = MState::maximally_mixed(2).pow(3).unwrap();
        assert!((&mm.into_mat() - &HermitianMat::identity(8).scale(0.125)).frob_norm() < 1e-14);

        // eigenvalues of ρ⊗ρ are pairwise products
        let p2 = rho.pow(2).unwrap();
        let evs = rho.mat().eigvalsh().unwrap();
        let mut prods: Vec<f64> = evs
            .iter()
            .flat_map(|a| evs.iter().map(move |b| a * b))
            .collect();
        prods.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (p, q) in prods.iter().zip(p2.mat().eigvalsh().unwrap().iter()) {
            assert!((p - q).abs() < 1e-12);
        }

        assert!(matches!(
            MState::random(3, 1).pow(9),
            Err(Error::DimensionCap { .. })
        ));
    }

    #[test]
    fn pow_splits_as_tensor() {
        let rho = MState::random(2, 17);
        let lhs = rho.pow(3).unwrap();
        let rhs = rho.pow(2).unwrap().tensor(&rho);
        assert!((lhs.mat() - rhs.mat()).frob_norm() < 1e-13);
    }

    #[test]
    fn tensor_assoc_flattens_identically() {
        let a = MState::random(2, 4);
        let b = MState::random(2, 5);
        let c = MState::random(3, 6);
        let left = a.tensor(&b).tensor(&c);
        let right = a.tensor(&b.tensor(&c));
        assert!((left.mat() - right.mat()).frob_norm() < 1e-15 * left.mat().frob_norm());
    }

    #[test]
    fn partial_trace_recovers_factors() {
        let rho = MState::random(2, 11);
        let sigma = MState::random(3, 12);
        let joint = rho.tensor(&sigma);
        let got1 = joint.partial_trace(Factor::First, (2, 3)).unwrap();
        assert!((got1.mat() - rho.mat()).frob_norm() < 1e-12);
        let got2 = joint.partial_trace(Factor::Second, (2, 3)).unwrap();
        assert!((got2.mat() - sigma.mat()).frob_norm() < 1e-12);
        assert!((got1.mat().trace() - 1.0).abs() < 1e-12);

        assert!(joint.partial_trace(Factor::First, (4, 2)).is_err());
    }

    #[test]
    fn bell_state_marginal_is_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = Ket::new(vec![
            Complex64::new(h, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(h, 0.0),
        ])
        .unwrap();
        let marg = MState::pure(&bell)
            .partial_trace(Factor::First, (2, 2))
            .unwrap();
        assert!((marg.mat() - MState::maximally_mixed(2).mat()).frob_norm() < 1e-12);
    }

    #[test]
    fn trace_distance_cases() {
        let rho = MState::random(3, 7);
        assert!(rho.trace_distance(&rho).unwrap() < 1e-12);

        let d = MState::pure(&Ket::basis(2, 0))
            .trace_distance(&MState::pure(&Ket::basis(2, 1)))
            .unwrap();
        assert!((d - 1.0).abs() < 1e-12, "orthogonal pures at distance 1");

        let sigma = MState::random(3, 8);
        let ds = rho.trace_distance(&sigma).unwrap();
        assert!((0.0..=1.0).contains(&ds));
        assert!((ds - sigma.trace_distance(&rho).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_stable_under_common_factor() {
        let rho = MState::random(2, 31);
        let sigma = MState::random(2, 32);
        let tau = MState::random(2, 33);
        let base = rho.trace_distance(&sigma).unwrap();
        let lifted = rho
            .tensor(&tau)
            .trace_distance(&sigma.tensor(&tau))
            .unwrap();
        assert!((base - lifted).abs() < 1e-9);
    }

    #[test]
    fn random_state_determinism_and_rank() {
        let a = MState::random(3, 99);
        let b = MState::random(3, 99);
        assert!((a.mat() - b.mat()).frob_norm() == 0.0, "same seed, same state");
        assert!((a.mat().trace() - 1.0).abs() < 1e-10);

        for seed in 0..1000 {
            let s = MState::random(3, seed);
            assert!(
                s.min_eigenvalue().unwrap() > 0.0,
                "Ginibre state should be full rank (seed {seed})"
            );
        }
    }

    #[test]
    fn strict_constructor_rejects_bad_states() {
        assert!(matches!(
            MState::new(HermitianMat::diag(&[0.7, 0.7])),
            Err(Error::InvalidTrace { .. })
        ));
        assert!(matches!(
            MState::new(HermitianMat::diag(&[1.5, -0.5])),
            Err(Error::NotPsd { .. })
        ));
        // clamped constructor fixes the same input
        let fixed = MState::clamped(HermitianMat::diag(&[1.5, -0.5])).unwrap();
        assert!((fixed.mat().trace() - 1.0).abs() < 1e-12);
        assert!(fixed.min_eigenvalue().unwrap() >= 0.0);
    }

    #[test]
    fn ket_normalization() {
        assert!(Ket::new(vec![Complex64::new(0.9, 0.0), Complex64::new(0.1, 0.0)]).is_err());
        let k = Ket::normalized(vec![Complex64::new(3.0, 0.0), Complex64::new(4.0, 0.0)]).unwrap();
        assert!((k.amplitudes()[0].re - 0.6).abs() < 1e-15);
        assert!(Ket::normalized(vec![Complex64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn state_json_roundtrip() {
        let rho = MState::random(2, 21);
        let s = serde_json::to_string(&rho).unwrap();
        assert!(s.contains("\"kind\":\"mstate\""));
        let back: MState = serde_json::from_str(&s).unwrap();
        assert!((back.mat() - rho.mat()).frob_norm() < 1e-12);

        // a matrix that is not a state must be rejected
        let bad = r#"{"kind":"mstate","dim":2,"entries":[[0.7,0],[0,0],[0,0],[0.7,0]]}"#;
        assert!(serde_json::from_str::<MState>(bad).is_err());
    }

    #[test]
    fn ket_json_roundtrip() {
        let k = Ket::random(3, 5);
        let s = serde_json::to_string(&k).unwrap();
        let back: Ket = serde_json::from_str(&s).unwrap();
        assert!((back.overlap(&k).unwrap().norm() - 1.0).abs() < 1e-12);
    }
}
