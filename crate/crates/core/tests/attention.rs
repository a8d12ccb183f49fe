use aft_core::attention::{
    afa, aft_encoder_forward, band_attention, band_index_set, dense_attention_oracle, focus_weights, multi_head_afa,
    multi_head_dense, AftEncoder, AttentionParams, EncoderConfig, FocalSet, Focus, FocusWeights,
};
use aft_core::tensor::{grad_check, init, masked_softmax};
use aft_core::{rng, Graph, ParamStore, Tensor};
use proptest::prelude::*;

fn mat(seed: u64, rows: usize, cols: usize, scale: f64) -> Tensor {
    init::uniform(rows, cols, scale, &mut rng::seeded(seed)).unwrap()
}

fn focal_set() -> impl Strategy<Value = FocalSet> {
    prop::collection::btree_set(1usize..40, 1..5).prop_map(|s| FocalSet::new(s.into_iter().collect()).unwrap())
}

/// Softmax of the first `len` logits.
fn softmax_weights(logits: &[f64], len: usize) -> FocusWeights {
    let z: Vec<f64> = logits[..len].iter().map(|x| x.exp()).collect();
    let s: f64 = z.iter().sum();
    FocusWeights::new(z.iter().map(|x| x / s).collect()).unwrap()
}

/// Textbook scaled dot-product attention restricted to each query's band,
/// mixed over foci. Written without any of the library's kernels.
fn afa_reference(q: &Tensor, k: &Tensor, v: &Tensor, alpha: &[f64], focal: &[usize]) -> Vec<f64> {
    let (n, dh, dv) = (q.rows(), q.cols(), v.cols());
    let mut out = vec![0.0; n * dv];
    for j in 0..n {
        for (&f, &a) in focal.iter().zip(alpha) {
            let lo = j.saturating_sub(f);
            let hi = (j + f).min(n - 1);
            let scores: Vec<f64> = (lo..=hi)
                .map(|i| (0..dh).map(|c| q.get(j, c) * k.get(i, c)).sum::<f64>() / (dh as f64).sqrt())
                .collect();
            let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
            for (i, s) in (lo..=hi).zip(&scores) {
                let p = (s - m).exp() / z;
                for c in 0..dv {
                    out[j * dv + c] += a * p * v.get(i, c);
                }
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masked_softmax_is_a_distribution_on_the_mask(
        scores in prop::collection::vec(-30.0f64..30.0, 1..20),
        bits in prop::collection::vec(any::<bool>(), 20),
    ) {
        let mut mask = bits[..scores.len()].to_vec();
        mask[0] = true;
        let p = masked_softmax(&scores, &mask).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (pi, m) in p.iter().zip(&mask) {
            if *m { prop_assert!(*pi > 0.0) } else { prop_assert_eq!(*pi, 0.0) }
        }
    }

    #[test]
    fn band_rows_sum_to_one(n in 1usize..50, f in 1usize..60, seed in any::<u64>()) {
        let (q, k) = (mat(seed, n, 3, 2.0), mat(seed ^ 1, n, 3, 2.0));
        for j in 0..n {
            let p = band_attention(&q, &k, j, f).unwrap();
            let b = band_index_set(j, f, n).unwrap();
            prop_assert_eq!(p.len(), b.len());
            prop_assert_eq!(b.lo, j.saturating_sub(f));
            prop_assert_eq!(b.hi, (j + f).min(n - 1));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn afa_matches_independent_reference(
        n in 1usize..40,
        focal in focal_set(),
        seed in any::<u64>(),
        logits in prop::collection::vec(-3.0f64..3.0, 4),
    ) {
        let (q, k, v) = (mat(seed, n, 4, 1.5), mat(seed ^ 1, n, 4, 1.5), mat(seed ^ 2, n, 3, 1.5));
        let alpha = softmax_weights(&logits, focal.len());
        let got = afa(&q, &k, &v, &alpha, &focal).unwrap();
        let want = afa_reference(&q, &k, &v, alpha.values(), focal.lengths());
        for (a, b) in got.data().iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn afa_is_linear_in_the_focus_weights(n in 1usize..30, focal in focal_set(), seed in any::<u64>()) {
        let (q, k, v) = (mat(seed, n, 2, 1.0), mat(seed ^ 1, n, 2, 1.0), mat(seed ^ 2, n, 2, 1.0));
        let alpha = FocusWeights::uniform(focal.len());
        let mixed = afa(&q, &k, &v, &alpha, &focal).unwrap();
        let mut sum = vec![0.0; n * 2];
        for i in 0..focal.len() {
            let one = afa(&q, &k, &v, &FocusWeights::one_hot(focal.len(), i).unwrap(), &focal).unwrap();
            for (s, x) in sum.iter_mut().zip(one.data()) {
                *s += x / focal.len() as f64;
            }
        }
        for (a, b) in mixed.data().iter().zip(&sum) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn full_width_focus_reduces_to_dense(n in 1usize..64, extra in 0usize..5, seed in any::<u64>()) {
        let f = (n - 1).max(1) + extra;
        let (q, k, v) = (mat(seed, n, 5, 2.0), mat(seed ^ 1, n, 5, 2.0), mat(seed ^ 2, n, 5, 2.0));
        let banded = afa(&q, &k, &v, &FocusWeights::new(vec![1.0]).unwrap(), &FocalSet::new(vec![f]).unwrap()).unwrap();
        prop_assert!(banded.max_abs_diff(&dense_attention_oracle(&q, &k, &v).unwrap()) < 1e-10);
    }

    #[test]
    fn output_stays_in_the_value_hull(
        n in 1usize..30,
        focal in focal_set(),
        logits in prop::collection::vec(-4.0f64..4.0, 4),
        seed in any::<u64>(),
    ) {
        let alpha = softmax_weights(&logits, focal.len());
        let (q, k, v) = (mat(seed, n, 3, 2.0), mat(seed ^ 1, n, 3, 2.0), mat(seed ^ 2, n, 2, 5.0));
        let out = afa(&q, &k, &v, &alpha, &focal).unwrap();
        for j in 0..n {
            let b = band_index_set(j, focal.max(), n).unwrap();
            for c in 0..2 {
                let col: Vec<f64> = (b.lo..=b.hi).map(|i| v.get(i, c)).collect();
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(out.get(j, c) >= lo - 1e-12 && out.get(j, c) <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn focus_weights_are_interior_simplex(
        w in prop::collection::vec(-5.0f64..5.0, 6),
        gate in prop::collection::vec(-2.0f64..2.0, 18),
        bias in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let alpha = focus_weights(&w, &Tensor::matrix(3, 6, gate).unwrap(), &bias).unwrap();
        prop_assert!(alpha.is_interior());
        prop_assert!((alpha.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dense_attention_is_permutation_equivariant(n in 1usize..20, seed in any::<u64>(), shift in any::<u64>()) {
        let (q, k, v) = (mat(seed, n, 3, 2.0), mat(seed ^ 1, n, 3, 2.0), mat(seed ^ 2, n, 3, 2.0));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left((shift as usize) % n);
        perm.swap(0, n - 1);
        let permute = |t: &Tensor| {
            let rows: Vec<&[f64]> = perm.iter().map(|&i| t.row(i)).collect();
            Tensor::from_rows(&rows).unwrap()
        };
        let out = dense_attention_oracle(&q, &k, &v).unwrap();
        let out_p = dense_attention_oracle(&permute(&q), &permute(&k), &permute(&v)).unwrap();
        prop_assert!(out_p.max_abs_diff(&permute(&out)) < 1e-12);
    }

    #[test]
    fn multi_head_dense_matches_per_head_oracle(n in 1usize..12, heads in 1usize..4, seed in any::<u64>()) {
        let d = 2 * heads;
        let mut store = ParamStore::new();
        let mut r = rng::seeded(seed);
        let p = AttentionParams::init(&mut store, "a", d, heads, &mut r).unwrap();
        let x = mat(seed ^ 7, n, d, 1.0);
        let mut g = Graph::new();
        let xn = g.input(&x);
        let out = multi_head_dense(&mut g, &store, xn, &p).unwrap();
        let got = g.tensor(out);

        let project = |w, b| {
            let (w, b) = (store.get(w), store.get(b));
            let mut data = Vec::with_capacity(n * d);
            for i in 0..n {
                for o in 0..d {
                    data.push((0..d).map(|c| x.get(i, c) * w.get(o, c)).sum::<f64>() + b.data()[o]);
                }
            }
            Tensor::matrix(n, d, data).unwrap()
        };
        let (q, k, v) = (project(p.wq, p.bq), project(p.wk, p.bk), project(p.wv, p.bv));
        let dh = d / heads;
        let mut cat = vec![0.0; n * d];
        for h in 0..heads {
            let cols = |t: &Tensor| Tensor::matrix(n, dh, (0..n).flat_map(|i| t.row(i)[h * dh..(h + 1) * dh].to_vec()).collect()).unwrap();
            let o = dense_attention_oracle(&cols(&q), &cols(&k), &cols(&v)).unwrap();
            for i in 0..n {
                cat[i * d + h * dh..i * d + (h + 1) * dh].copy_from_slice(o.row(i));
            }
        }
        let cat = Tensor::matrix(n, d, cat).unwrap();
        let (wo, bo) = (store.get(p.wo), store.get(p.bo));
        for i in 0..n {
            for o in 0..d {
                let want = (0..d).map(|c| cat.get(i, c) * wo.get(o, c)).sum::<f64>() + bo.data()[o];
                prop_assert!((got.get(i, o) - want).abs() < 1e-12);
            }
        }
    }
}

fn encoder_config(focal: Vec<usize>) -> EncoderConfig {
    EncoderConfig {
        d: 8,
        heads: 2,
        layers: 2,
        ff_hidden: 12,
        focal: FocalSet::new(focal).unwrap(),
        max_positions: 16,
        ln_eps: 1e-5,
    }
}

#[test]
fn frozen_full_width_focus_equals_dense_encoder() {
    let mut r = rng::seeded(3);
    let mut store = ParamStore::new();
    let enc = AftEncoder::init(&mut store, "enc", encoder_config(vec![3, 9, 40]), &mut r).unwrap();
    for n in [1, 5, 16] {
        let x = mat(n as u64, n, 8, 1.0);
        let w = vec![0.3; 8];
        let dense = aft_encoder_forward(&enc, &store, &x, &w, &Focus::Dense).unwrap();
        let frozen = aft_encoder_forward(&enc, &store, &x, &w, &Focus::Frozen(FocusWeights::one_hot(3, 2).unwrap())).unwrap();
        assert!(dense.max_abs_diff(&frozen) < 1e-9, "n={n}: {}", dense.max_abs_diff(&frozen));
    }
}

#[test]
fn frozen_focus_must_match_the_focal_set() {
    let mut store = ParamStore::new();
    let enc = AftEncoder::init(&mut store, "enc", encoder_config(vec![3, 9]), &mut rng::seeded(1)).unwrap();
    let x = mat(1, 4, 8, 1.0);
    let bad = Focus::Frozen(FocusWeights::uniform(3));
    assert!(aft_encoder_forward(&enc, &store, &x, &[0.0; 8], &bad).is_err());
}

#[test]
fn positions_longer_than_the_table_are_rejected() {
    let mut store = ParamStore::new();
    let enc = AftEncoder::init(&mut store, "enc", encoder_config(vec![3]), &mut rng::seeded(1)).unwrap();
    let x = mat(1, 17, 8, 1.0);
    assert!(aft_encoder_forward(&enc, &store, &x, &[0.0; 8], &Focus::Learned).is_err());
}

#[test]
fn encoder_gradients_under_every_focus_mode() {
    for focus in [Focus::Learned, Focus::Dense, Focus::Frozen(FocusWeights::new(vec![0.2, 0.8]).unwrap())] {
        let mut r = rng::seeded(9);
        let mut store = ParamStore::new();
        let cfg = EncoderConfig { d: 4, heads: 2, layers: 1, ff_hidden: 5, focal: FocalSet::new(vec![1, 3]).unwrap(), max_positions: 6, ln_eps: 1e-5 };
        let enc = AftEncoder::init(&mut store, "enc", cfg, &mut r).unwrap();
        let gate = init::uniform(2, 4, 1.0, &mut r).unwrap();
        store.set_data(enc.gate_w, gate.data()).unwrap();
        let x = store.insert("x", init::uniform(5, 4, 1.0, &mut r).unwrap()).unwrap();
        let w = store.insert("w", init::uniform(1, 4, 1.0, &mut r).unwrap()).unwrap();
        let report = grad_check(&mut store, 1e-6, |g, s| {
            let (xn, wn) = (g.param(s, x), g.param(s, w));
            let out = enc.forward(g, s, xn, wn, &focus)?;
            let t = g.tanh(out.m);
            let sq = g.mul(t, out.m)?;
            Ok(g.sum(sq))
        })
        .unwrap();
        assert!(report.max_relative_error < 1e-5, "{focus:?}: {report:?}");
    }
}

#[test]
fn multi_head_afa_shares_one_alpha() {
    let mut r = rng::seeded(4);
    let mut store = ParamStore::new();
    let p = AttentionParams::init(&mut store, "a", 6, 3, &mut r).unwrap();
    let focal = FocalSet::new(vec![1, 4]).unwrap();
    let x = mat(8, 7, 6, 1.0);
    let run = |alpha: [f64; 2]| {
        let mut g = Graph::new();
        let xn = g.input(&x);
        let a = g.constant(1, 2, alpha.to_vec()).unwrap();
        let out = multi_head_afa(&mut g, &store, xn, &p, a, &focal).unwrap();
        g.tensor(out)
    };
    let (a, b) = (run([1.0, 0.0]), run([0.0, 1.0]));
    let mix = run([0.25, 0.75]);
    // Heads are mixed before the (affine) output projection, so the result
    // is the same convex combination of the pure-focus outputs.
    for i in 0..mix.len() {
        let want = 0.25 * a.data()[i] + 0.75 * b.data()[i];
        assert!((mix.data()[i] - want).abs() < 1e-12);
    }
}
