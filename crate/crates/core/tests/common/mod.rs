//! Reference implementations shared by the integration tests. Nothing here
//! calls into the library's numerics.

#![allow(dead_code)]

use nalgebra::{Complex, Matrix3, Vector3};

pub type C64 = Complex<f64>;

/// Eigenvalues of a Hermitian 3x3 matrix, ascending, from the closed-form
/// roots of its characteristic cubic followed by Newton polishing.
pub fn cubic_eigenvalues(m: &Matrix3<C64>) -> [f64; 3] {
    let a11 = m[(0, 0)].re;
    let a22 = m[(1, 1)].re;
    let a33 = m[(2, 2)].re;
    let a12 = m[(0, 1)];
    let a13 = m[(0, 2)];
    let a23 = m[(1, 2)];

    // λ³ − c2 λ² + c1 λ − c0
    let c2 = a11 + a22 + a33;
    let c1 = a11 * a22 + a22 * a33 + a33 * a11 - a12.norm_sqr() - a13.norm_sqr() - a23.norm_sqr();
    let c0 = a11 * a22 * a33 + 2.0 * (a12 * a23 * a13.conj()).re
        - a11 * a23.norm_sqr()
        - a22 * a13.norm_sqr()
        - a33 * a12.norm_sqr();

    let q = c2 / 3.0;
    let off = a12.norm_sqr() + a13.norm_sqr() + a23.norm_sqr();
    let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * off;
    let mut roots = if p2 == 0.0 {
        [q, q, q]
    } else {
        let p = (p2 / 6.0).sqrt();
        // det((A − qI)/p)/2 via the shifted cubic: det(A − qI) = −char(q).
        let char_q = q * q * q - c2 * q * q + c1 * q - c0;
        let r = (-char_q / (p * p * p) / 2.0).clamp(-1.0, 1.0);
        let phi = r.acos() / 3.0;
        let hi = q + 2.0 * p * phi.cos();
        let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
        [lo, 3.0 * q - hi - lo, hi]
    };
    for root in roots.iter_mut() {
        for _ in 0..8 {
            let f = ((*root - c2) * *root + c1) * *root - c0;
            let df = (3.0 * *root - 2.0 * c2) * *root + c1;
            if df.abs() < 1e-300 {
                break;
            }
            let step = f / df;
            if !step.is_finite() || step.abs() > 1e-6 * (1.0 + root.abs()) {
                // Far from a simple root the trig estimate is already better.
                break;
            }
            *root -= step;
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
}

/// Hamiltonian in the (+1, 0, −1) basis written out entry by entry.
#[allow(clippy::too_many_arguments)]
pub fn explicit_hamiltonian(d: f64, gamma: f64, mz: f64, mx: f64, my: f64, nx: f64, ny: f64, b: Vector3<f64>) -> Matrix3<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| C64::new(re, im);
    let (bx, by, bz) = (gamma * b.x, gamma * b.y, gamma * b.z);
    // Off-diagonal (+1,0) and (0,−1) from {Sx,Sz}, {Sy,Sz} and the transverse field.
    let h10 = c(s * (nx + bx), s * (-ny - by));
    let h0m = c(s * (-nx + bx), s * (ny - by));
    let h1m = c(-mx, -my);
    Matrix3::new(
        c(d + mz + bz, 0.0), h10, h1m,
        h10.conj(), c(0.0, 0.0), h0m,
        h1m.conj(), h0m.conj(), c(d + mz - bz, 0.0),
    )
}

/// Cubic-frame stress couplings written directly from the component formulas.
pub fn cubic_terms(s: &Matrix3<f64>, a1: f64, a2: f64, b: f64, cc: f64) -> (f64, f64, f64) {
    let (xx, yy, zz) = (s[(0, 0)], s[(1, 1)], s[(2, 2)]);
    let (yz, zx, xy) = (s[(1, 2)], s[(2, 0)], s[(0, 1)]);
    let mz = a1 * (xx + yy + zz) + 2.0 * a2 * (yz + zx + xy);
    let mx = b * (2.0 * zz - xx - yy) + cc * (2.0 * xy - yz - zx);
    let my = 3f64.sqrt() * (b * (xx - yy) + cc * (yz - zx));
    (mz, mx, my)
}

/// Rows are the NV frame axes of the `[111]` centre in cubic coordinates.
pub fn canonical_axes() -> Matrix3<f64> {
    let a = 1.0 / 6f64.sqrt();
    let b = 1.0 / 2f64.sqrt();
    let c = 1.0 / 3f64.sqrt();
    Matrix3::new(-a, -a, 2.0 * a, b, -b, 0.0, c, c, c)
}

/// Transition frequencies from oracle eigenvalues, taking the lowest level
/// as `m_s = 0` (valid while a positive zero-field splitting dominates).
pub fn oracle_pair(h: &Matrix3<C64>) -> (f64, f64) {
    let [lo, mid, hi] = cubic_eigenvalues(h);
    (mid - lo, hi - lo)
}

/// Smallest root of a continuous function on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    assert!(f_lo * f(hi) <= 0.0, "bracket does not straddle a root");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Deterministic pseudo-random numbers for loops where proptest would be
/// overkill (splitmix64).
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }

    pub fn hermitian(&mut self, scale: f64) -> Matrix3<C64> {
        let mut m = Matrix3::<C64>::zeros();
        for i in 0..3 {
            m[(i, i)] = C64::new(self.uniform(-scale, scale), 0.0);
            for j in (i + 1)..3 {
                let z = C64::new(self.uniform(-scale, scale), self.uniform(-scale, scale));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }
}
