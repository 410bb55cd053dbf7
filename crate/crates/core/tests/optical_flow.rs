use flowroi::flow::{compute_flow, flow_step, polynomial_expansion, FlowField, FlowParams};
use flowroi::synth::{generate_synthetic, textured_plane, SyntheticSpec};
use flowroi::Plane;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Weighted least-squares fit of `c + b·x + xᵀAx` at `(px, py)`, solved by
/// Householder QR on the design matrix.
fn lsq_fit(p: &Plane<f64>, px: usize, py: usize, n: usize, sigma: f64) -> [f64; 6] {
    let half = n as isize / 2;
    let g: Vec<f64> = (-half..=half).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let rows = n * n;
    let mut a = DMatrix::zeros(rows, 6);
    let mut y = DVector::zeros(rows);
    let mut k = 0;
    for dy in -half..=half {
        for dx in -half..=half {
            let w = (g[(dx + half) as usize] * g[(dy + half) as usize]).sqrt();
            let (x, yy) = (dx as f64, dy as f64);
            let phi = [1.0, x, yy, x * x, 2.0 * x * yy, yy * yy];
            for (j, v) in phi.iter().enumerate() {
                a[(k, j)] = w * v;
            }
            y[k] = w * p.at((px as isize + dx) as usize, (py as isize + dy) as usize);
            k += 1;
        }
    }
    let qr = a.qr();
    let sol = qr.r().solve_upper_triangular(&(qr.q().transpose() * y)).unwrap();
    [sol[0], sol[1], sol[2], sol[3], sol[4], sol[5]]
}

fn textured(w: usize, h: usize, seed: u64) -> Plane<f64> {
    let t = textured_plane(w, h, seed);
    let (lo, hi) = t.data.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    t.map(|v| (v - lo) / (hi - lo))
}

/// `src` sampled at `(x - dx, y - dy)`, i.e. content moved by `(dx, dy)`.
fn translate(src: &Plane<f64>, dx: f64, dy: f64) -> Plane<f64> {
    Plane::from_fn(src.width, src.height, |x, y| src.sample_bilinear(x as f64 - dx, y as f64 - dy))
}

#[test]
fn expansion_of_constant() {
    let p = Plane::from_fn(24, 24, |_, _| 0.37f64);
    let c = polynomial_expansion(&p, 5, 1.1);
    for y in 2..22 {
        for x in 2..22 {
            let q = c.at(x, y);
            assert!((q.c - 0.37).abs() < 1e-12);
            assert!(q.b.iter().chain(&q.a).all(|v| v.abs() < 1e-12));
        }
    }
}

#[test]
fn expansion_of_ramp_and_parabola() {
    let ramp = Plane::from_fn(32, 32, |x, _| 0.02 * x as f64);
    let c = polynomial_expansion(&ramp, 5, 1.1);
    for y in 3..29 {
        for x in 3..29 {
            let q = c.at(x, y);
            assert!((q.b[0] - 0.02).abs() < 1e-6 && q.b[1].abs() < 1e-6);
            assert!(q.a.iter().all(|v| v.abs() < 1e-6));
        }
    }
    let par = Plane::from_fn(16, 16, |x, _| (x as f64 - 8.0).powi(2));
    let c = polynomial_expansion(&par, 5, 1.1);
    for y in 3..13 {
        for x in 3..13 {
            assert!((c.at(x, y).a[0] - 1.0).abs() < 1e-3);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn expansion_matches_dense_least_squares(seed in any::<u64>(), n in prop::sample::select(vec![5usize, 7]), sigma in 0.8f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Plane::from_fn(20, 20, |_, _| rng.random::<f64>());
        let c = polynomial_expansion(&p, n, sigma);
        for _ in 0..10 {
            let (x, y) = (rng.random_range(4..16), rng.random_range(4..16));
            let r = lsq_fit(&p, x, y, n, sigma);
            let q = c.at(x, y);
            let got = [q.c, q.b[0], q.b[1], q.a[0], q.a[1], q.a[2]];
            for (g, e) in got.iter().zip(r) {
                prop_assert!((g - e).abs() < 1e-8, "{:?} vs {:?}", got, r);
            }
        }
    }
}

#[test]
fn flow_step_identical_and_blank() {
    let p = textured(48, 48, 1);
    let c = polynomial_expansion(&p, 5, 1.1);
    let f = flow_step(&c, &c, &FlowField::zeros(48, 48), 15);
    assert!(f.vectors.iter().all(|v| v[0].abs() < 1e-9 && v[1].abs() < 1e-9));
    let blank = polynomial_expansion(&Plane::from_fn(48, 48, |_, _| 0.5f64), 5, 1.1);
    let f = flow_step(&blank, &blank, &FlowField::zeros(48, 48), 15);
    assert!(f.vectors.iter().all(|v| *v == [0.0, 0.0]));
}

#[test]
fn flow_step_single_level_translation() {
    let p = textured(96, 96, 2);
    let q = translate(&p, 2.0, 0.0);
    let f = flow_step(&polynomial_expansion(&p, 5, 1.1), &polynomial_expansion(&q, 5, 1.1), &FlowField::zeros(96, 96), 15);
    let (mut u, mut v, mut n) = (0.0, 0.0, 0.0);
    for y in 16..80 {
        for x in 16..80 {
            let d = f.at(x, y);
            u += d[0];
            v += d[1];
            n += 1.0;
        }
    }
    let (u, v) = (u / n, v / n);
    assert!((1.5..=2.5).contains(&u) && (-0.3..=0.3).contains(&v), "mean ({u}, {v})");
}

#[test]
fn compute_flow_zero_for_identical_pair() {
    for seed in 0..3 {
        let p = textured(80, 64, seed);
        let f = compute_flow(&p, &p, &FlowParams::default()).unwrap();
        assert!(f.vectors.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
    }
    let c = Plane::from_fn(64, 64, |_, _| 0.25f64);
    let f = compute_flow(&c, &c, &FlowParams::default()).unwrap();
    assert!(f.is_finite() && f.vectors.iter().all(|v| *v == [0.0, 0.0]));
}

#[test]
fn compute_flow_recovers_translations() {
    let p = textured(160, 160, 5);
    for (i, &(dx, dy)) in [(4.0, -3.0), (-5.0, 0.0), (1.5, 2.5), (0.0, 5.0)].iter().enumerate() {
        let q = translate(&p, dx, dy);
        for window in [11, 15, 21] {
            let params = FlowParams {
                window_size: window,
                ..FlowParams::default()
            };
            let f = compute_flow(&p, &q, &params).unwrap();
            assert!(f.is_finite());
            let epe = f.mean_endpoint_error([dx, dy], 16);
            assert!(epe < 0.5, "case {i} window {window}: epe {epe}");
        }
    }
}

#[test]
fn intensity_scale_invariance() {
    let p = textured(96, 96, 8);
    let q = translate(&p, 2.0, 1.0);
    let a = compute_flow(&p, &q, &FlowParams::default()).unwrap();
    let b = compute_flow(&p.map(|v| 2.0 * v), &q.map(|v| 2.0 * v), &FlowParams::default()).unwrap();
    let worst = a
        .vectors
        .iter()
        .zip(&b.vectors)
        .map(|(x, y)| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt())
        .fold(0.0f64, f64::max);
    assert!(worst < 1e-3, "max endpoint difference {worst}");
}

#[test]
fn moving_blob_on_static_background() {
    let spec = SyntheticSpec {
        n_cells: 1,
        n_frames: 2,
        width: 128,
        height: 128,
        speed_range: (3.0, 3.0),
        cell_radius_range: (10.0, 10.0),
        contrast_range: (60.0, 60.0),
        low_contrast_fraction: 0.0,
        noise_sigma: 1.0,
        seed: 21,
        ..SyntheticSpec::default()
    };
    let (seq, truth) = generate_synthetic(&spec).unwrap();
    let a = seq.frames()[0].to_plane::<f64>();
    let b = seq.frames()[1].to_plane::<f64>();
    let f = compute_flow(&a, &b, &FlowParams::default()).unwrap();
    let mag = f.magnitude();
    let cell = &truth.cells[0];
    let inside: Vec<f64> = cell.footprint(0, 128, 128).into_iter().map(|(x, y)| mag.at(x, y)).collect();
    let mean_in = inside.iter().sum::<f64>() / inside.len() as f64;
    assert!(mean_in >= 1.0, "blob flow {mean_in}");
    let both = {
        let mut m = truth.masks[0].clone();
        m.union_with(&truth.masks[1]);
        flowroi::roi::dilate(&m, 12)
    };
    let mut bg: Vec<f64> = (0..128 * 128)
        .filter(|&i| !both.bits()[i])
        .map(|i| mag.data[i])
        .collect();
    bg.sort_by(f64::total_cmp);
    assert!(bg[bg.len() / 2] < 0.2, "background median {}", bg[bg.len() / 2]);
}

#[test]
fn dimension_mismatch_and_bad_params() {
    let a = textured(64, 64, 1);
    let b = textured(64, 48, 1);
    assert!(compute_flow(&a, &b, &FlowParams::default()).is_err());
    for bad in [
        FlowParams { window_size: 4, ..FlowParams::default() },
        FlowParams { poly_n: 1, ..FlowParams::default() },
        FlowParams { pyramid_levels: 0, ..FlowParams::default() },
        FlowParams { pyramid_scale: 1.0, ..FlowParams::default() },
    ] {
        assert!(bad.validate().is_err());
    }
}

#[test]
fn flo_dump_roundtrip() {
    let p = textured(40, 40, 3);
    let f = compute_flow(&p, &translate(&p, 1.0, 0.5), &FlowParams::default()).unwrap();
    let f32: FlowField<f32> = FlowField {
        width: f.width,
        height: f.height,
        vectors: f.vectors.iter().map(|v| [v[0] as f32, v[1] as f32]).collect(),
    };
    let mut buf = Vec::new();
    f32.write_flo(&mut buf).unwrap();
    assert_eq!(&buf[..4], b"FLO1");
    assert_eq!(buf.len(), 12 + 8 * 40 * 40);
    assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 40);
    assert_eq!(FlowField::<f32>::read_flo(&buf[..]).unwrap(), f32);
}

#[test]
fn result_independent_of_thread_count() {
    let p = textured(96, 96, 4).cast::<f32>();
    let q = translate(&textured(96, 96, 4), 2.0, -1.0).cast::<f32>();
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| compute_flow(&p, &q, &FlowParams::default()).unwrap())
    };
    assert_eq!(run(1), run(4));
}
