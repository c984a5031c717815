//! Anvil forward model: `(α, P, B)` to the four NV transition pairs.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::frames::{anvil_stress, nv_orientations, to_nv_frame, AnvilStressParams, LabField};
use crate::spin::{self, StressCouplings, TransitionPair, ZfsParams};

/// Physical constants plus the field direction in the cubic frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NvModel {
    pub zfs: ZfsParams,
    pub couplings: StressCouplings,
    /// Unit vector; defaults to the anvil axis `[001]`.
    pub field_direction: Vector3<f64>,
}

impl Default for NvModel {
    fn default() -> Self {
        Self {
            zfs: ZfsParams::default(),
            couplings: StressCouplings::default(),
            field_direction: Vector3::z(),
        }
    }
}

impl NvModel {
    pub fn new(zfs: ZfsParams, couplings: StressCouplings) -> Self {
        Self { zfs, couplings, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.zfs.validate()?;
        self.couplings.validate()?;
        LabField::new(1.0, self.field_direction).map(|_| ())
    }

    /// Pairs for the four lattice orientations, in `nv_orientations` order.
    pub fn orientation_pairs(&self, alpha: f64, pressure: f64, field_mt: f64) -> Result<[TransitionPair; 4], ModelError> {
        let stress = anvil_stress(&AnvilStressParams::new(alpha, pressure)?);
        let field = LabField::new(field_mt, self.field_direction)?;
        let mut out = [TransitionPair::new(0.0, 0.0); 4];
        for (slot, o) in out.iter_mut().zip(nv_orientations()) {
            *slot = spin::solve(&self.zfs, &self.couplings, &to_nv_frame(&o, &stress, &field))?;
        }
        Ok(out)
    }

    /// Pair of the canonical `[111]` orientation. For a field along a cube
    /// axis all four orientations coincide with it.
    pub fn pair(&self, alpha: f64, pressure: f64, field_mt: f64) -> Result<TransitionPair, ModelError> {
        let stress = anvil_stress(&AnvilStressParams::new(alpha, pressure)?);
        let field = LabField::new(field_mt, self.field_direction)?;
        spin::solve(&self.zfs, &self.couplings, &to_nv_frame(&nv_orientations()[0], &stress, &field))
    }

    /// Same as [`NvModel::pair`] but without the physical-range checks on
    /// `α` and `P`, for use inside optimizers that may step outside them.
    pub fn pair_unchecked(&self, alpha: f64, pressure: f64, field_mt: f64) -> TransitionPair {
        let stress = crate::frames::StressTensor::diagonal(alpha * pressure, alpha * pressure, pressure);
        let field_nv = nv_orientations()[0].rotation() * (self.field_direction * field_mt);
        let inputs = crate::frames::NvFrameInputs::new(
            stress.rotated(nv_orientations()[0].rotation()),
            field_nv,
        );
        let h = spin::build_hamiltonian(&self.zfs, &self.couplings, &inputs)
            .expect("diagonal stress is symmetric");
        spin::transition_frequencies(&h)
    }

    /// Zero-field stress splitting `Δσ(α, P)`.
    pub fn zero_field_splitting(&self, alpha: f64, pressure: f64) -> Result<f64, ModelError> {
        Ok(self.pair(alpha, pressure, 0.0)?.splitting())
    }

    /// `dΔ/dB` at `(α, P, B)` by central differences, MHz/mT.
    pub fn splitting_slope(&self, alpha: f64, pressure: f64, field_mt: f64) -> Result<f64, ModelError> {
        let h = 1e-4_f64.max(field_mt * 1e-6);
        let lo = (field_mt - h).max(0.0);
        let hi = field_mt + h;
        let s_lo = self.pair(alpha, pressure, lo)?.splitting();
        let s_hi = self.pair(alpha, pressure, hi)?.splitting();
        Ok((s_hi - s_lo) / (hi - lo))
    }
}
