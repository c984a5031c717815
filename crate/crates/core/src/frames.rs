//! Anvil-tip stress, NV orientations in the diamond lattice, and the
//! rotations that carry cubic-frame quantities into each NV frame.
//!
//! Cubic frame: the crystal axes of the anvil, with the anvil (load) axis
//! along `[001]`. NV frame: `z` along the NV symmetry axis. The `x` axis
//! of the canonical `[111]` frame is the projection of `[001]` onto the
//! plane normal to the NV axis; the other three frames are obtained from it
//! by the two-fold cube rotations that take their axis onto `[111]`, so that
//! all four frames are related by lattice symmetries.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

const FRAME_TOL: f64 = 1e-12;

/// Symmetric 3x3 stress tensor in GPa. Compressive stress is positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressTensor(Matrix3<f64>);

impl StressTensor {
    /// Wraps a matrix, rejecting it if it is not symmetric to 1e-12 GPa.
    pub fn new(m: Matrix3<f64>) -> Result<Self, ModelError> {
        let asym = (m - m.transpose()).abs().max();
        if !m.iter().all(|v| v.is_finite()) {
            return Err(ModelError::InvalidInput("stress tensor has non-finite entries".into()));
        }
        if asym > FRAME_TOL {
            return Err(ModelError::InvalidInput(format!(
                "stress tensor is not symmetric (max asymmetry {asym:e} GPa)"
            )));
        }
        Ok(Self(m))
    }

    pub fn zero() -> Self {
        Self(Matrix3::zeros())
    }

    pub fn isotropic(p: f64) -> Self {
        Self(Matrix3::identity() * p)
    }

    pub fn diagonal(xx: f64, yy: f64, zz: f64) -> Self {
        Self(Matrix3::from_diagonal(&Vector3::new(xx, yy, zz)))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `R σ Rᵀ`, symmetrized to remove rounding asymmetry.
    pub fn rotated(&self, rotation: &Matrix3<f64>) -> Self {
        let m = rotation * self.0 * rotation.transpose();
        Self((m + m.transpose()) * 0.5)
    }
}

/// Parameters of the flat-culet anvil stress: normal component `P`,
/// tangential components reduced to `αP`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnvilStressParams {
    pub alpha: f64,
    pub pressure: f64,
}

impl AnvilStressParams {
    pub fn new(alpha: f64, pressure: f64) -> Result<Self, ModelError> {
        if !(alpha > 0.0 && alpha <= 1.5) {
            return Err(ModelError::InvalidInput(format!(
                "alpha must lie in (0, 1.5], got {alpha}"
            )));
        }
        if !(pressure >= 0.0 && pressure.is_finite()) {
            return Err(ModelError::InvalidInput(format!(
                "pressure must be finite and non-negative, got {pressure}"
            )));
        }
        Ok(Self { alpha, pressure })
    }
}

/// `diag(αP, αP, P)` in the cubic frame, anvil axis along `[001]`.
pub fn anvil_stress(params: &AnvilStressParams) -> StressTensor {
    let t = params.alpha * params.pressure;
    StressTensor::diagonal(t, t, params.pressure)
}

/// The four `<111>` bond directions an NV axis can take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NvAxis {
    /// `[111]`
    PPP,
    /// `[1-1-1]`
    PMM,
    /// `[-11-1]`
    MPM,
    /// `[-1-11]`
    MMP,
}

impl NvAxis {
    pub const ALL: [NvAxis; 4] = [NvAxis::PPP, NvAxis::PMM, NvAxis::MPM, NvAxis::MMP];

    /// Unnormalized lattice direction.
    pub fn lattice_direction(self) -> Vector3<f64> {
        match self {
            NvAxis::PPP => Vector3::new(1.0, 1.0, 1.0),
            NvAxis::PMM => Vector3::new(1.0, -1.0, -1.0),
            NvAxis::MPM => Vector3::new(-1.0, 1.0, -1.0),
            NvAxis::MMP => Vector3::new(-1.0, -1.0, 1.0),
        }
    }

    pub fn unit_direction(self) -> Vector3<f64> {
        self.lattice_direction().normalize()
    }

    /// Two-fold cube rotation taking this axis onto `[111]`.
    fn to_canonical(self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&self.lattice_direction())
    }

    pub fn label(self) -> &'static str {
        match self {
            NvAxis::PPP => "[111]",
            NvAxis::PMM => "[1-1-1]",
            NvAxis::MPM => "[-11-1]",
            NvAxis::MMP => "[-1-11]",
        }
    }
}

/// Rotation from the cubic frame into the canonical `[111]` NV frame.
/// Rows are the NV-frame axes expressed in cubic coordinates.
pub fn canonical_rotation() -> Matrix3<f64> {
    let s6 = 6f64.sqrt();
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    Matrix3::new(
        -1.0 / s6, -1.0 / s6, 2.0 / s6, //
        1.0 / s2, -1.0 / s2, 0.0, //
        1.0 / s3, 1.0 / s3, 1.0 / s3,
    )
}

/// One NV orientation: its axis and the cubic→NV rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NvOrientation {
    axis: Vector3<f64>,
    rotation: Matrix3<f64>,
    label: Option<NvAxis>,
}

impl NvOrientation {
    /// Builds a lattice orientation with the documented x-axis convention.
    pub fn lattice(axis: NvAxis) -> Self {
        Self {
            axis: axis.unit_direction(),
            rotation: canonical_rotation() * axis.to_canonical(),
            label: Some(axis),
        }
    }

    /// Arbitrary frame: `rotation` must be proper orthogonal and map `axis`
    /// onto `z`.
    pub fn custom(axis: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self, ModelError> {
        let norm = axis.norm();
        if !(norm > 0.0) {
            return Err(ModelError::InvalidInput("NV axis must be non-zero".into()));
        }
        let axis = axis / norm;
        let ortho = (rotation * rotation.transpose() - Matrix3::identity()).abs().max();
        if ortho > FRAME_TOL || (rotation.determinant() - 1.0).abs() > FRAME_TOL {
            return Err(ModelError::InvalidInput("NV rotation must be proper orthogonal".into()));
        }
        if (rotation * axis - Vector3::z()).abs().max() > FRAME_TOL {
            return Err(ModelError::InvalidInput("NV rotation must map its axis to z".into()));
        }
        Ok(Self { axis, rotation, label: None })
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn label(&self) -> Option<NvAxis> {
        self.label
    }

    /// Same physical orientation with the whole lab rotated by `q`.
    pub fn rotated_lab(&self, q: &Matrix3<f64>) -> Self {
        Self {
            axis: q * self.axis,
            rotation: self.rotation * q.transpose(),
            label: None,
        }
    }
}

/// The four lattice orientations in fixed order `[111]`, `[1-1-1]`,
/// `[-11-1]`, `[-1-11]`.
pub fn nv_orientations() -> [NvOrientation; 4] {
    NvAxis::ALL.map(NvOrientation::lattice)
}

/// Applied field in the cubic frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabField {
    magnitude: f64,
    direction: Vector3<f64>,
}

impl LabField {
    pub fn new(magnitude: f64, direction: Vector3<f64>) -> Result<Self, ModelError> {
        if !(magnitude >= 0.0 && magnitude.is_finite()) {
            return Err(ModelError::InvalidInput(format!(
                "field magnitude must be finite and non-negative, got {magnitude}"
            )));
        }
        if ((direction.norm() - 1.0).abs()) > FRAME_TOL {
            return Err(ModelError::InvalidInput("field direction must be a unit vector".into()));
        }
        Ok(Self { magnitude, direction })
    }

    /// Field along the anvil axis, `[001]`.
    pub fn along_anvil_axis(magnitude: f64) -> Result<Self, ModelError> {
        Self::new(magnitude, Vector3::z())
    }

    pub fn zero() -> Self {
        Self { magnitude: 0.0, direction: Vector3::z() }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.direction
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.direction * self.magnitude
    }
}

/// Stress (GPa) and field (mT) expressed in one NV frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NvFrameInputs {
    pub stress_nv: StressTensor,
    pub field_nv: Vector3<f64>,
}

impl NvFrameInputs {
    pub fn new(stress_nv: StressTensor, field_nv: Vector3<f64>) -> Self {
        Self { stress_nv, field_nv }
    }
}

pub fn to_nv_frame(orientation: &NvOrientation, stress: &StressTensor, field: &LabField) -> NvFrameInputs {
    let r = orientation.rotation();
    NvFrameInputs {
        stress_nv: stress.rotated(r),
        field_nv: r * field.vector(),
    }
}
