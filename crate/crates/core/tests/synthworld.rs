use std::f64::consts::{PI, TAU};

use ambiview_core::codebook::cossim;
use ambiview_core::so3::{angle_between, dot3, normalize3, Rotation};
use ambiview_core::synthworld::{
    apply_roll, differing_blobs, make_ambiguous_pair, patch_visible, render_clean, render_embedding, PairParams,
    SynthObject,
};
use proptest::prelude::*;

fn pair(seed: u64, radius: f64) -> (SynthObject, SynthObject) {
    make_ambiguous_pair(&PairParams {
        seed,
        n_blobs: 96,
        descriptor_dim: 8,
        patch_radius: radius,
        ..PairParams::default()
    })
    .unwrap()
}

fn direction() -> impl Strategy<Value = [f64; 3]> {
    (0.01f64..PI - 0.01, 0.0f64..TAU).prop_map(|(t, p)| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()])
}

/// Embedding oracle written directly from the model: visibility-weighted
/// descriptor sum, then the pairwise in-plane rotation.
fn oracle_render(obj: &SynthObject, r: &Rotation) -> Vec<f64> {
    let v = r.view_direction();
    let dim = obj.descriptor_dim();
    let mut z = vec![0.0; dim];
    for b in &obj.blobs {
        let t = dot3(&v, &b.position).max(0.0);
        for k in 0..dim {
            z[k] += t * t * b.descriptor[k];
        }
    }
    let (s, c) = r.roll().sin_cos();
    (0..dim)
        .map(|k| if k % 2 == 0 { c * z[k] - s * z[k + 1] } else { s * z[k - 1] + c * z[k] })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_matches_model(seed in 0u64..50, d in direction(), roll in 0.0f64..TAU) {
        let (a, _) = pair(seed, 0.5);
        let r = Rotation::look_at(d, roll).unwrap();
        let z = render_clean(&a, &r);
        for (x, y) in z.as_slice().iter().zip(oracle_render(&a, &r)) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn roll_equivariance(seed in 0u64..50, d in direction(), roll in 0.0f64..TAU, delta in -PI..PI) {
        let (a, _) = pair(seed, 0.5);
        let z0 = render_clean(&a, &Rotation::look_at(d, roll).unwrap());
        let z1 = render_clean(&a, &Rotation::look_at(d, roll + delta).unwrap());
        let mut rolled = z0.0.clone();
        apply_roll(&mut rolled, delta);
        for (x, y) in rolled.iter().zip(z1.as_slice()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn twins_identical_iff_patch_hidden(seed in 0u64..50, d in direction(), roll in 0.0f64..TAU) {
        let (a, b) = pair(seed, 0.6);
        let r = Rotation::look_at(d, roll).unwrap();
        let (za, zb) = (render_clean(&a, &r), render_clean(&b, &r));
        if !patch_visible(&a, &b, &r) {
            prop_assert_eq!(za.as_slice(), zb.as_slice());
            prop_assert_eq!(cossim(za.as_slice(), zb.as_slice()).unwrap(), 1.0);
        }
    }

    #[test]
    fn noise_is_seeded(seed in any::<u64>(), sigma in 0.01f64..2.0) {
        let (a, _) = pair(1, 0.5);
        let r = Rotation::from_euler(0.2, 0.4, 0.6);
        let z1 = render_embedding(&a, &r, sigma, seed);
        prop_assert_eq!(&z1, &render_embedding(&a, &r, sigma, seed));
        prop_assert_ne!(&z1, &render_embedding(&a, &r, sigma, seed.wrapping_add(1)));
    }
}

#[test]
fn pair_differs_only_inside_cap() {
    for seed in 0..10 {
        let params = PairParams {
            seed,
            n_blobs: 96,
            descriptor_dim: 8,
            ..PairParams::default()
        };
        let (a, b) = make_ambiguous_pair(&params).unwrap();
        let center = normalize3(&params.patch_center).unwrap();
        let diff = differing_blobs(&a, &b);
        assert!(!diff.is_empty());
        for (m, (x, y)) in a.blobs.iter().zip(&b.blobs).enumerate() {
            assert_eq!(x.position, y.position);
            let inside = angle_between(&x.position, &center) <= params.patch_radius;
            assert_eq!(inside, diff.contains(&m), "blob {m}");
        }
        assert_ne!(a.class_id, b.class_id);
        assert_eq!(a.group_id, b.group_id);
    }
}

#[test]
fn same_params_same_pair() {
    let p = PairParams::default();
    assert_eq!(make_ambiguous_pair(&p).unwrap(), make_ambiguous_pair(&p).unwrap());
    let q = PairParams { seed: 1, ..p };
    assert_ne!(make_ambiguous_pair(&q).unwrap().0, make_ambiguous_pair(&PairParams::default()).unwrap().0);
}

#[test]
fn patch_visibility_from_front_and_back() {
    let (a, b) = pair(3, 0.3);
    let facing = Rotation::look_at([1.0, 0.0, 0.0], 0.0).unwrap();
    let behind = Rotation::look_at([-1.0, 0.0, 0.0], 1.0).unwrap();
    assert!(patch_visible(&a, &b, &facing));
    assert!(!patch_visible(&a, &b, &behind));
    assert_ne!(render_clean(&a, &facing), render_clean(&b, &facing));
}

#[test]
fn invalid_params_rejected() {
    for p in [
        PairParams { descriptor_dim: 7, ..PairParams::default() },
        PairParams { n_blobs: 0, ..PairParams::default() },
        PairParams { patch_radius: 0.0, ..PairParams::default() },
        PairParams { patch_radius: 2.0, ..PairParams::default() },
        PairParams { patch_center: [0.0; 3], ..PairParams::default() },
    ] {
        assert!(make_ambiguous_pair(&p).is_err(), "{p:?}");
    }
}
