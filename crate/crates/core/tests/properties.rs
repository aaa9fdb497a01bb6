use nalgebra::DMatrix;
use proptest::prelude::*;
use tensoranom::graph::grid_graph;
use tensoranom::prox::{shrink, svt};
use tensoranom::scoring::{abs_scores, gaussian_nll, nll_scores, threshold, upper_count, ScoringConfig};
use tensoranom::Tensor;

const SHAPE: [usize; 3] = [6, 3, 4];

fn tensor_strategy() -> impl Strategy<Value = Tensor> {
    let n = SHAPE.iter().product::<usize>();
    prop::collection::vec(-3.0f64..3.0, n).prop_map(|d| Tensor::new(SHAPE.to_vec(), d).unwrap())
}

fn scoring_cfg(k_hop: usize, block_local: bool) -> ScoringConfig<f64> {
    let mut cfg = ScoringConfig::new(grid_graph(2, 3).unwrap(), 0, 2);
    cfg.k_hop = k_hop;
    cfg.block_local = block_local;
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nll_is_translation_invariant(s in tensor_strategy(), shift in -5.0f64..5.0, k in 0usize..3, local in any::<bool>()) {
        let cfg = scoring_cfg(k, local);
        let a = nll_scores(&s, &cfg).unwrap();
        let b = nll_scores(&s.map(|v| v + shift), &cfg).unwrap();
        for (x, y) in a.scores.as_slice().iter().zip(b.scores.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-7 * (1.0 + x.abs()), "{x} vs {y}");
        }
        for (m0, m1) in a.mu.iter().zip(&b.mu) {
            prop_assert!((m1 - m0 - shift).abs() < 1e-9);
        }
        for (s0, s1) in a.sigma.iter().zip(&b.sigma) {
            prop_assert!((s0 - s1).abs() < 1e-7 * (1.0 + s0));
        }
    }

    #[test]
    fn nll_bounded_below_and_sigma_floored(s in tensor_strategy(), k in 0usize..3) {
        let cfg = scoring_cfg(k, false);
        let f = nll_scores(&s, &cfg).unwrap();
        let bound = cfg.sigma_floor.ln() + 0.5 * std::f64::consts::TAU.ln();
        prop_assert!(f.scores.as_slice().iter().all(|v| v.is_finite() && *v >= bound));
        prop_assert!(f.sigma.iter().all(|&v| v >= cfg.sigma_floor));
    }

    #[test]
    fn gaussian_nll_increases_with_deviation(mu in -2.0f64..2.0, sigma in 0.01f64..5.0, a in 0.0f64..10.0, b in 0.0f64..10.0) {
        prop_assume!((a - b).abs() > 1e-9);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(gaussian_nll(mu + lo, mu, sigma) < gaussian_nll(mu + hi, mu, sigma));
        prop_assert!(gaussian_nll(mu - lo, mu, sigma) < gaussian_nll(mu - hi, mu, sigma));
    }

    #[test]
    fn abs_ignores_sign(s in tensor_strategy(), alpha in 0.01f64..0.99) {
        let a = abs_scores(&s, alpha).unwrap();
        let b = abs_scores(&s.map(|v| -v), alpha).unwrap();
        prop_assert_eq!(a.scores.as_slice(), b.scores.as_slice());
        prop_assert_eq!(a.flags.data, b.flags.data);
    }

    #[test]
    fn flag_count_matches_quantile_rank(mut v in prop::collection::vec(-1e3f64..1e3, 1..300), alpha in 0.001f64..0.999) {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        let (gamma, flags) = threshold(&v, alpha).unwrap();
        let n = flags.iter().filter(|&&f| f).count();
        prop_assert_eq!(n, upper_count(alpha, v.len()));
        prop_assert!(v.iter().zip(&flags).all(|(s, f)| *f == (*s >= gamma)));
    }

    #[test]
    fn ties_never_reduce_the_flag_count(v in prop::collection::vec(0u8..4, 1..200), alpha in 0.001f64..0.999) {
        let s: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        let (_, flags) = threshold(&s, alpha).unwrap();
        prop_assert!(flags.iter().filter(|&&f| f).count() >= upper_count(alpha, s.len()));
    }

    #[test]
    fn shrink_is_the_l1_prox(v in -10.0f64..10.0, lambda in 0.0f64..5.0) {
        let p = shrink(v, lambda);
        prop_assert!((v - p).abs() <= lambda + 1e-12);
        prop_assert!(p == 0.0 || p.signum() == v.signum());
        prop_assert!(p.abs() <= v.abs());
    }

    #[test]
    fn svt_shrinks_singular_values(rows in 1usize..7, cols in 1usize..7, seed in prop::collection::vec(-2.0f64..2.0, 36), tau in 0.0f64..3.0) {
        let m = DMatrix::from_row_slice(rows, cols, &seed[..rows * cols]);
        let out = svt(&m, tau).unwrap();
        let mut before: Vec<f64> = m.clone().singular_values().iter().copied().collect();
        before.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut after: Vec<f64> = out.output.clone().singular_values().iter().copied().collect();
        after.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (b, a) in before.iter().zip(&after) {
            prop_assert!((a - (b - tau).max(0.0)).abs() < 1e-8, "{b} -> {a} at tau {tau}");
        }
        let kept = before.iter().filter(|&&s| s - tau > 1e-12).count();
        prop_assert_eq!(out.retained_rank, kept);
    }

    #[test]
    fn svt_is_nonexpansive(seed_a in prop::collection::vec(-2.0f64..2.0, 20), seed_b in prop::collection::vec(-2.0f64..2.0, 20), tau in 0.0f64..2.0) {
        let a = DMatrix::from_row_slice(4, 5, &seed_a);
        let b = DMatrix::from_row_slice(4, 5, &seed_b);
        let pa = svt(&a, tau).unwrap().output;
        let pb = svt(&b, tau).unwrap().output;
        prop_assert!((pa - pb).norm() <= (a - b).norm() + 1e-9);
    }
}
