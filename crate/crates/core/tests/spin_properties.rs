mod common;

use common::{canonical_axes, cubic_eigenvalues, cubic_terms, explicit_hamiltonian, oracle_pair, SplitMix};
use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use nvdac::frames::{anvil_stress, nv_orientations, to_nv_frame, AnvilStressParams, LabField, NvAxis, StressTensor};
use nvdac::spin::{self, SpinMatrix, StressCouplings, ZfsParams};
use nvdac::{NvModel, TransitionPair};
use proptest::prelude::*;

#[test]
fn eigenvalues_match_cubic_oracle_on_random_hermitian() {
    let mut rng = SplitMix(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let m = rng.hermitian(3000.0);
        let (vals, _) = SpinMatrix::new(m).unwrap().eigen();
        let oracle = cubic_eigenvalues(&m);
        for k in 0..3 {
            worst = worst.max((vals[k] - oracle[k]).abs());
        }
    }
    assert!(worst < 1e-9, "worst eigenvalue mismatch {worst:e} MHz");
}

#[test]
fn hamiltonian_matches_explicit_entries() {
    let zfs = ZfsParams::default();
    let mut rng = SplitMix(7);
    for mixing in [false, true] {
        let couplings = StressCouplings { include_spin_half_mixing: mixing, ..StressCouplings::default() };
        for _ in 0..200 {
            let mut s = Matrix3::zeros();
            for i in 0..3 {
                for j in i..3 {
                    let v = rng.uniform(-50.0, 50.0);
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
            let b = Vector3::new(rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0));
            let r0 = canonical_axes();
            let inputs = nvdac::frames::NvFrameInputs::new(StressTensor::new(r0 * s * r0.transpose()).unwrap(), r0 * b);
            let h = spin::build_hamiltonian(&zfs, &couplings, &inputs).unwrap();

            let (mz, mx, my) = cubic_terms(&s, couplings.a1, couplings.a2, couplings.b, couplings.c);
            let (nx, ny) = if mixing {
                let (_, nx, ny) = cubic_terms(&s, 0.0, 0.0, couplings.d, couplings.e);
                (nx, ny)
            } else {
                (0.0, 0.0)
            };
            let expected = explicit_hamiltonian(zfs.d_zero, zfs.gamma_e, mz, mx, my, nx, ny, r0 * b);
            let diff = (h.matrix() - expected).map(|z| z.norm()).max();
            assert!(diff < 1e-9, "entry mismatch {diff:e}");
        }
    }
}

#[test]
fn anvil_stress_closed_forms_at_zero_field() {
    let m = NvModel::default();
    let c = StressCouplings::default();
    for &alpha in &[0.4, 0.56, 0.7, 0.95, 1.0] {
        for &p in &[0.0, 1.0, 40.0, 73.0, 130.0] {
            let pair = m.pair(alpha, p, 0.0).unwrap();
            let center = 2870.0 + c.a1 * (1.0 + 2.0 * alpha) * p;
            let split = 4.0 * c.b.abs() * (1.0 - alpha) * p;
            assert!((pair.center() - center).abs() < 1e-9, "center at α={alpha} P={p}");
            assert!((pair.splitting() - split).abs() < 1e-9, "splitting at α={alpha} P={p}");
        }
    }
}

fn random_rotation(rng: &mut SplitMix) -> Matrix3<f64> {
    let axis = Vector3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    let angle = rng.uniform(-3.1, 3.1);
    *Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle).matrix()
}

#[test]
fn full_solution_agrees_with_oracle_pair() {
    let zfs = ZfsParams::default();
    let couplings = StressCouplings::default();
    let mut rng = SplitMix(99);
    for _ in 0..500 {
        let alpha = rng.uniform(0.4, 1.0);
        let p = rng.uniform(0.0, 130.0);
        let b = rng.uniform(0.0, 10.0);
        let dir = random_rotation(&mut rng) * Vector3::z();
        let stress = anvil_stress(&AnvilStressParams::new(alpha, p).unwrap());
        let field = LabField::new(b, dir).unwrap();
        for o in nv_orientations() {
            let inputs = to_nv_frame(&o, &stress, &field);
            let pair = spin::solve(&zfs, &couplings, &inputs).unwrap();
            let sigma_cubic = canonical_axes().transpose() * inputs.stress_nv.matrix() * canonical_axes();
            let (mz, mx, my) = cubic_terms(&sigma_cubic, couplings.a1, couplings.a2, couplings.b, couplings.c);
            let h = explicit_hamiltonian(zfs.d_zero, zfs.gamma_e, mz, mx, my, 0.0, 0.0, inputs.field_nv);
            let (lo, hi) = oracle_pair(&h);
            assert!((pair.nu_minus - lo).abs() < 1e-9 && (pair.nu_plus - hi).abs() < 1e-9);
        }
    }
}

#[test]
fn field_along_cube_axes_keeps_orientations_degenerate() {
    let mut rng = SplitMix(3);
    for axis in [Vector3::x(), Vector3::y(), Vector3::z(), -Vector3::z()] {
        let model = NvModel { field_direction: axis, ..NvModel::default() };
        for _ in 0..50 {
            let pairs = model
                .orientation_pairs(rng.uniform(0.4, 1.0), rng.uniform(0.0, 130.0), rng.uniform(0.0, 10.0))
                .unwrap();
            for p in &pairs[1..] {
                assert!(p.max_abs_diff(&pairs[0]) < 1e-9);
            }
        }
    }
}

#[test]
fn field_off_cube_axis_lifts_degeneracy() {
    let model = NvModel { field_direction: NvAxis::PPP.unit_direction(), ..NvModel::default() };
    let pairs = model.orientation_pairs(0.95, 50.0, 5.0).unwrap();
    assert!(pairs[1].max_abs_diff(&pairs[0]) > 1.0);
}

fn first_order_gap(alpha: f64, p: f64, b: f64) -> f64 {
    let zfs = ZfsParams::default();
    let couplings = StressCouplings::default();
    let stress = anvil_stress(&AnvilStressParams::new(alpha, p).unwrap());
    let field = LabField::along_anvil_axis(b).unwrap();
    let inputs = to_nv_frame(&nv_orientations()[0], &stress, &field);
    let exact = spin::solve(&zfs, &couplings, &inputs).unwrap();
    let approx = spin::first_order_for_inputs(&zfs, &couplings, &inputs).unwrap();
    (approx.splitting() - exact.splitting()).abs() / exact.splitting()
}

#[test]
fn first_order_error_shrinks_with_field() {
    // Off-axis field is the only non-perturbative ingredient at fixed stress.
    for &(alpha, p) in &[(0.56, 40.0), (0.95, 103.0), (1.0, 20.0)] {
        let errs: Vec<f64> = [8.0, 4.0, 2.0, 1.0].iter().map(|&b| first_order_gap(alpha, p, b)).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{errs:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn trace_is_twice_shifted_d(alpha in 0.1f64..1.5, p in 0.0f64..150.0, b in 0.0f64..20.0,
                                x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        prop_assume!(x * x + y * y + z * z > 1e-3);
        let zfs = ZfsParams::default();
        let couplings = StressCouplings { include_spin_half_mixing: true, ..StressCouplings::default() };
        let stress = anvil_stress(&AnvilStressParams::new(alpha, p).unwrap());
        let field = LabField::new(b, Vector3::new(x, y, z).normalize()).unwrap();
        let inputs = to_nv_frame(&nv_orientations()[0], &stress, &field);
        let h = spin::build_hamiltonian(&zfs, &couplings, &inputs).unwrap();
        let mz = couplings.stress_terms(&inputs.stress_nv).mz;
        prop_assert!((h.trace() - 2.0 * (zfs.d_zero + mz)).abs() < 1e-9);
        let (vals, _) = h.eigen();
        prop_assert!((vals.sum() - h.trace()).abs() < 1e-8);
    }

    #[test]
    fn joint_lab_rotation_is_invisible(alpha in 0.4f64..1.0, p in 0.0f64..130.0, b in 0.0f64..10.0,
                                       ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
                                       angle in -3.1f64..3.1) {
        prop_assume!(ax * ax + ay * ay + az * az > 1e-3);
        let q = *Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(ax, ay, az)), angle).matrix();
        let zfs = ZfsParams::default();
        let couplings = StressCouplings::default();
        let stress = anvil_stress(&AnvilStressParams::new(alpha, p).unwrap());
        let field = LabField::along_anvil_axis(b).unwrap();
        let rotated_field = LabField::new(b, q * Vector3::z()).unwrap();
        for o in nv_orientations() {
            let before = spin::solve(&zfs, &couplings, &to_nv_frame(&o, &stress, &field)).unwrap();
            let after = spin::solve(&zfs, &couplings,
                &to_nv_frame(&o.rotated_lab(&q), &stress.rotated(&q), &rotated_field)).unwrap();
            prop_assert!(before.max_abs_diff(&after) < 1e-9);
        }
    }

    #[test]
    fn first_order_exact_without_field(alpha in 0.4f64..1.0, p in 0.0f64..130.0) {
        let zfs = ZfsParams::default();
        let couplings = StressCouplings::default();
        let stress = anvil_stress(&AnvilStressParams::new(alpha, p).unwrap());
        let inputs = to_nv_frame(&nv_orientations()[0], &stress, &LabField::zero());
        let exact = spin::solve(&zfs, &couplings, &inputs).unwrap();
        let approx = spin::first_order_for_inputs(&zfs, &couplings, &inputs).unwrap();
        prop_assert!(exact.max_abs_diff(&approx) < 1e-9);
    }

    #[test]
    fn splitting_grows_with_field(alpha in 0.4f64..1.0, p in 0.0f64..130.0, b in 0.0f64..9.0) {
        let m = NvModel::default();
        let lo = m.pair(alpha, p, b).unwrap().splitting();
        let hi = m.pair(alpha, p, b + 1.0).unwrap().splitting();
        prop_assert!(hi > lo);
    }

    #[test]
    fn transition_pair_is_sorted(a in 0.0f64..5000.0, b in 0.0f64..5000.0) {
        let p = TransitionPair::new(a, b);
        prop_assert!(p.nu_minus <= p.nu_plus);
        prop_assert!(p.splitting() >= 0.0);
    }
}
