use lfsm_core::local_time::local_time_at;
use lfsm_core::stats::{log_log_slope, mean, std_dev, zero_mean_regression_pvalue};
use lfsm_core::zero_energy::{fit_decay_rate, FourierInverter};
use lfsm_core::{
    martingale_decomposition, orlicz_moment_proxy, sum_zero_energy, DecompositionOptions, InnovationModel, OrliczKind,
    PathBundle, ProcessSpec, RealFunction,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian_walk(n: usize, seed: u64) -> PathBundle {
    let spec = ProcessSpec::random_walk(2.0).unwrap();
    PathBundle::simulate(&spec, &InnovationModel::gaussian(), n, seed).unwrap()
}

fn no_v() -> DecompositionOptions {
    DecompositionOptions { compute_v: false, ..Default::default() }
}

#[test]
fn martingale_pieces_have_mean_zero() {
    let model = InnovationModel::gaussian();
    let f = RealFunction::gaussian();
    let (n, reps) = (16, 500);
    let mut m = vec![Vec::with_capacity(reps); n];
    for r in 0..reps {
        let d = martingale_decomposition(&gaussian_walk(n, 7000 + r as u64), &f, &model, &no_v()).unwrap();
        for k in 0..n {
            m[k].push(d.m[k]);
        }
    }
    for (k, col) in m.iter().enumerate() {
        let bound = 3.0 * std_dev(col) / (reps as f64).sqrt();
        assert!(mean(col).abs() <= bound, "k = {k}: mean {} bound {bound}", mean(col));
    }
}

#[test]
fn xi_is_unpredictable_from_the_past() {
    let model = InnovationModel::gaussian();
    let f = RealFunction::gaussian();
    let (n, reps) = (32, 60);
    // Per k: pairs (x_t, ξ_{k,t+1}) pooled over t and replications.
    let mut past = vec![Vec::new(); n];
    let mut next = vec![Vec::new(); n];
    let mut acf_ok = 0;
    let mut acf_total = 0;
    for r in 0..reps {
        let p = gaussian_walk(n, 9100 + r as u64);
        let d = martingale_decomposition(&p, &f, &model, &no_v()).unwrap();
        for (k, row) in d.xi.iter().enumerate() {
            for t in 1..row.len() {
                past[k].push(p.x_at(t));
                next[k].push(row[t]);
            }
        }
        for (k, acf) in d.xi_autocorrelations() {
            acf_total += 1;
            if acf.abs() <= 3.0 / ((n - k) as f64).sqrt() {
                acf_ok += 1;
            }
        }
    }
    let tested: Vec<usize> = (0..n).filter(|&k| next[k].len() >= 30).collect();
    let passing = tested.iter().filter(|&&k| zero_mean_regression_pvalue(&past[k], &next[k]) >= 0.05).count();
    assert!(passing as f64 >= 0.9 * tested.len() as f64, "{passing}/{} lags pass", tested.len());
    assert!(acf_ok as f64 >= 0.95 * acf_total as f64, "{acf_ok}/{acf_total} autocorrelations in range");
}

#[test]
fn conditional_expectations_decay_at_the_predicted_rates() {
    let model = InnovationModel::gaussian();
    let ks: Vec<usize> = (3..=9).map(|j| 1usize << j).collect();
    let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    // First moment: E f(x_k) for nonnegative f decays like d_k^{−1}, H = 1/2.
    let tri = RealFunction::triangular();
    let inv = FourierInverter::new(&model, &tri, &[1.0]).unwrap();
    let first: Vec<f64> = ks.iter().map(|&k| inv.expect(0.0, k).unwrap().value).collect();
    let s1 = log_log_slope(&kf, &first);
    assert!((s1 + 0.5).abs() <= 0.15, "first-moment slope {s1}");
    // Zero-energy f decays at least like d_k^{−(1+β)}.
    let g = RealFunction::shifted_diff(&tri, 0.0, 1.0);
    let inv = FourierInverter::new(&model, &g, &[1.0]).unwrap();
    let beta = 0.4;
    for y in [0.0, 0.7] {
        let vals: Vec<f64> = ks.iter().map(|&k| inv.expect(y, k).unwrap().value.abs()).collect();
        let s = log_log_slope(&kf, &vals);
        assert!(s <= -(1.0 + beta) * 0.5, "y = {y}: slope {s}");
    }
    // The exponential term is reported, not asserted.
    let short: Vec<f64> = (1..=6).map(|k| inv.expect(0.7, k).unwrap().value).collect();
    assert!(fit_decay_rate(&(1..=6).map(f64::from).collect::<Vec<_>>(), &short).is_finite());
}

#[test]
fn nonzero_integral_sums_follow_local_time() {
    let n = 1 << 14;
    let g = RealFunction::epanechnikov().affine(3.0, 0.5, 1.0).unwrap();
    let tri = RealFunction::triangular();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for r in 0..200 {
        let p = gaussian_walk(n, 300 + r);
        a.push(sum_zero_energy(&p, &g, true).unwrap() / p.e_n);
        b.push(local_time_at(&p, &tri, 1.0, 0.0).unwrap() * g.integral());
    }
    let (ma, mb) = (mean(&a), mean(&b));
    let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() - 1) as f64;
    let corr = cov / (std_dev(&a) * std_dev(&b));
    assert!(corr > 0.9, "correlation {corr}");
}

#[test]
fn orlicz_proxy_is_stable_for_half_normal() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let draws: Vec<f64> = (0..20_000).map(|_| StandardNormal.sample(&mut rng)).map(|z: f64| z.abs()).collect();
    let a = orlicz_moment_proxy(&draws[..10_000], OrliczKind::Tau1).unwrap();
    let b = orlicz_moment_proxy(&draws[10_000..], OrliczKind::Tau1).unwrap();
    assert!((a / b - 1.0).abs() <= 0.1, "{a} vs {b}");
    // p = 1 dominates: ‖Z‖_1 = sqrt(2/π) beats ‖Z‖_2 / sqrt(2).
    let want = (2.0 / std::f64::consts::PI).sqrt();
    assert!((a / want - 1.0).abs() < 0.05, "{a} vs {want}");
}
