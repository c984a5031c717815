//! Ground-state spin Hamiltonian of the NV center under stress and field.
//!
//! Basis ordering is `|m_s = +1⟩, |0⟩, |−1⟩`. Energies are in MHz, stress in
//! GPa, field in mT.
//!
//! The spin-stress couplings follow the usual C3v parameterization, written
//! in the cubic frame of the canonical `[111]` center:
//!
//! ```text
//! Mz = a1 (σxx + σyy + σzz) + 2 a2 (σyz + σzx + σxy)
//! Mx = b (2σzz − σxx − σyy) + c (2σxy − σyz − σzx)
//! My = √3 [ b (σxx − σyy) + c (σyz − σzx) ]
//! ```
//!
//! with the `N` pair built the same way from `(d, e)`. An NV-frame tensor is
//! first carried back to that canonical cubic frame, so the scalars are
//! linear functionals of the NV-frame stress.

use nalgebra::{Complex, Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::frames::{canonical_rotation, NvFrameInputs, StressTensor};

pub type C64 = Complex<f64>;

/// Gaps below this (MHz) count as a collapsed three-level system.
pub const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZfsParams {
    /// Zero-field splitting `D`, MHz.
    pub d_zero: f64,
    /// Electron gyromagnetic ratio, MHz/mT.
    pub gamma_e: f64,
}

impl Default for ZfsParams {
    fn default() -> Self {
        Self { d_zero: 2870.0, gamma_e: 28.024 }
    }
}

impl ZfsParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.d_zero > 0.0 && self.d_zero.is_finite()) {
            return Err(ModelError::InvalidInput("d_zero must be positive".into()));
        }
        if !(self.gamma_e > 0.0 && self.gamma_e.is_finite()) {
            return Err(ModelError::InvalidInput("gamma_e must be positive".into()));
        }
        Ok(())
    }
}

/// Spin-stress coupling constants, MHz/GPa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StressCouplings {
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub c: f64,
    /// Axial-transverse couplings, used only with `include_spin_half_mixing`.
    /// No measured pair ships with the default set; it mirrors `(b, c)`.
    #[serde(default = "default_d")]
    pub d: f64,
    #[serde(default = "default_e")]
    pub e: f64,
    #[serde(default)]
    pub include_spin_half_mixing: bool,
}

fn default_d() -> f64 {
    StressCouplings::default().d
}

fn default_e() -> f64 {
    StressCouplings::default().e
}

impl Default for StressCouplings {
    fn default() -> Self {
        Self {
            a1: 4.86,
            a2: -3.7,
            b: -2.3,
            c: 3.5,
            d: -2.3,
            e: 3.5,
            include_spin_half_mixing: false,
        }
    }
}

impl StressCouplings {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [self.a1, self.a2, self.b, self.c, self.d, self.e];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidInput("stress couplings must be finite".into()));
        }
        Ok(())
    }

    /// Axial and transverse stress scalars for the given NV-frame stress.
    pub fn stress_terms(&self, stress_nv: &StressTensor) -> StressTerms {
        let r0 = canonical_rotation();
        let s = r0.transpose() * stress_nv.matrix() * r0;
        let (xx, yy, zz) = (s[(0, 0)], s[(1, 1)], s[(2, 2)]);
        let (yz, zx, xy) = (
            0.5 * (s[(1, 2)] + s[(2, 1)]),
            0.5 * (s[(2, 0)] + s[(0, 2)]),
            0.5 * (s[(0, 1)] + s[(1, 0)]),
        );
        let sqrt3 = 3f64.sqrt();
        let axial = 2.0 * zz - xx - yy;
        let shear = 2.0 * xy - yz - zx;
        let (nx, ny) = if self.include_spin_half_mixing {
            (
                self.d * axial + self.e * shear,
                sqrt3 * (self.d * (xx - yy) + self.e * (yz - zx)),
            )
        } else {
            (0.0, 0.0)
        };
        StressTerms {
            mz: self.a1 * (xx + yy + zz) + 2.0 * self.a2 * (yz + zx + xy),
            mx: self.b * axial + self.c * shear,
            my: sqrt3 * (self.b * (xx - yy) + self.c * (yz - zx)),
            nx,
            ny,
        }
    }
}

/// Scalars multiplying the stress operators in the Hamiltonian, MHz.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressTerms {
    pub mz: f64,
    pub mx: f64,
    pub my: f64,
    pub nx: f64,
    pub ny: f64,
}

impl StressTerms {
    /// Zero-field splitting of the `±1` pair produced by the `M` terms.
    pub fn transverse_splitting(&self) -> f64 {
        2.0 * self.mx.hypot(self.my)
    }
}

/// Hermitian 3x3 operator on the spin-1 space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinMatrix(Matrix3<C64>);

impl SpinMatrix {
    /// Accepts `m` if it is Hermitian to 1e-9 of its largest entry.
    pub fn new(m: Matrix3<C64>) -> Result<Self, ModelError> {
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let asym = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !scale.is_finite() || asym > 1e-9 * scale.max(f64::MIN_POSITIVE) {
            return Err(ModelError::InvalidInput("matrix is not Hermitian".into()));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Eigenvalues ascending with matching eigenvectors as columns.
    pub fn eigen(&self) -> (Vector3<f64>, Matrix3<C64>) {
        let eig = SymmetricEigen::new(self.0);
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = Vector3::from_fn(|i, _| eig.eigenvalues[idx[i]]);
        let vectors = Matrix3::from_fn(|r, c| eig.eigenvectors[(r, idx[c])]);
        (values, vectors)
    }
}

/// Spin-1 operators `(Sx, Sy, Sz)`.
pub fn spin_operators() -> [Matrix3<C64>; 3] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let re = |v: f64| C64::new(v, 0.0);
    let im = |v: f64| C64::new(0.0, v);
    let z = re(0.0);
    let sx = Matrix3::new(z, re(r), z, re(r), z, re(r), z, re(r), z);
    let sy = Matrix3::new(z, im(-r), z, im(r), z, im(-r), z, im(r), z);
    let sz = Matrix3::new(re(1.0), z, z, z, z, z, z, z, re(-1.0));
    [sx, sy, sz]
}

/// Lower/upper ODMR transition frequencies, MHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionPair {
    pub nu_minus: f64,
    pub nu_plus: f64,
}

impl TransitionPair {
    /// Orders the two frequencies.
    pub fn new(a: f64, b: f64) -> Self {
        Self { nu_minus: a.min(b), nu_plus: a.max(b) }
    }

    pub fn splitting(&self) -> f64 {
        self.nu_plus - self.nu_minus
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.nu_plus + self.nu_minus)
    }

    /// True when all three levels have collapsed onto one another.
    pub fn is_degenerate(&self) -> bool {
        self.nu_minus.abs() < DEGENERACY_TOL && self.nu_plus.abs() < DEGENERACY_TOL
    }

    pub fn max_abs_diff(&self, other: &TransitionPair) -> f64 {
        (self.nu_minus - other.nu_minus).abs().max((self.nu_plus - other.nu_plus).abs())
    }
}

/// `H = (D + Mz) Sz² + Mx (Sy² − Sx²) + My {Sx,Sy} + Nx {Sx,Sz} + Ny {Sy,Sz} + γ B·S`.
pub fn build_hamiltonian(
    params: &ZfsParams,
    couplings: &StressCouplings,
    inputs: &NvFrameInputs,
) -> Result<SpinMatrix, ModelError> {
    params.validate()?;
    couplings.validate()?;
    // Re-validate in case the tensor was assembled by hand.
    let stress = StressTensor::new(*inputs.stress_nv.matrix())?;
    if !inputs.field_nv.iter().all(|v| v.is_finite()) {
        return Err(ModelError::InvalidInput("field must be finite".into()));
    }
    let terms = couplings.stress_terms(&stress);
    let [sx, sy, sz] = spin_operators();
    let anti = |a: &Matrix3<C64>, b: &Matrix3<C64>| a * b + b * a;
    let re = |v: f64| C64::new(v, 0.0);
    let b = inputs.field_nv * params.gamma_e;

    let h = sz * sz * re(params.d_zero + terms.mz)
        + (sy * sy - sx * sx) * re(terms.mx)
        + anti(&sx, &sy) * re(terms.my)
        + anti(&sx, &sz) * re(terms.nx)
        + anti(&sy, &sz) * re(terms.ny)
        + sx * re(b.x)
        + sy * re(b.y)
        + sz * re(b.z);
    // Symmetrize away rounding in the products.
    Ok(SpinMatrix((h + h.adjoint()) * re(0.5)))
}

/// Exact transition frequencies from the `m_s = 0`-like eigenstate.
///
/// The reference state is the eigenvector with the largest `|⟨0|ψ⟩|²`,
/// ties going to the lower eigenvalue. Returned frequencies are absolute
/// energy gaps, sorted. A fully collapsed spectrum comes back as a pair
/// for which [`TransitionPair::is_degenerate`] holds.
pub fn transition_frequencies(h: &SpinMatrix) -> TransitionPair {
    let (values, vectors) = h.eigen();
    let weight = |k: usize| vectors[(1, k)].norm_sqr();
    let mut zero = 0;
    for k in 1..3 {
        if weight(k) > weight(zero) + 1e-12 {
            zero = k;
        }
    }
    let others: Vec<f64> = (0..3)
        .filter(|&k| k != zero)
        .map(|k| (values[k] - values[zero]).abs())
        .collect();
    TransitionPair::new(others[0], others[1])
}

/// Perturbative pair `ν± = D + δ ± Δ/2` with `Δ = sqrt(Δσ² + Δ_B²)`.
pub fn first_order_frequencies(
    params: &ZfsParams,
    delta: f64,
    delta_sigma: f64,
    delta_b: f64,
) -> Result<TransitionPair, ModelError> {
    if delta_sigma < 0.0 || delta_b < 0.0 {
        return Err(ModelError::InvalidInput("splittings must be non-negative".into()));
    }
    let half = 0.5 * delta_sigma.hypot(delta_b);
    let center = params.d_zero + delta;
    Ok(TransitionPair::new(center - half, center + half))
}

/// First-order pair for a given NV-frame input: `δ = Mz`,
/// `Δσ = 2 sqrt(Mx² + My²)`, `Δ_B = 2 γ |B_z|`.
pub fn first_order_for_inputs(
    params: &ZfsParams,
    couplings: &StressCouplings,
    inputs: &NvFrameInputs,
) -> Result<TransitionPair, ModelError> {
    let terms = couplings.stress_terms(&inputs.stress_nv);
    first_order_frequencies(
        params,
        terms.mz,
        terms.transverse_splitting(),
        2.0 * params.gamma_e * inputs.field_nv.z.abs(),
    )
}

/// Full diagonalization in one call.
pub fn solve(
    params: &ZfsParams,
    couplings: &StressCouplings,
    inputs: &NvFrameInputs,
) -> Result<TransitionPair, ModelError> {
    build_hamiltonian(params, couplings, inputs).map(|h| transition_frequencies(&h))
}
