use lfsm_core::local_time::{local_time_field, mass_grid, occupation_cdf, support_set, uniform_grid};
use lfsm_core::stats::median;
use lfsm_core::{
    reference_local_time, simulate_lfsm, InnovationModel, LfsmParams, PathBundle, ProcessSpec, RealFunction,
};

fn walk(n: usize, seed: u64) -> PathBundle {
    let spec = ProcessSpec::random_walk(2.0).unwrap();
    PathBundle::simulate(&spec, &InnovationModel::gaussian(), n, seed).unwrap()
}

#[test]
fn occupation_cdf_agrees_with_integrated_field() {
    let p = walk(1 << 14, 17);
    let tri = RealFunction::triangular();
    let grid = mass_grid(&p, &tri, 1.0, 2);
    let field = local_time_field(&p, &tri, 1.0, &grid).unwrap();
    let cum = field.cumulative();
    let mu = occupation_cdf(&p, &grid);
    let worst = cum.iter().zip(&mu).fold(0.0f64, |m, (c, u)| m.max((c - u).abs()));
    assert!(worst <= 0.02, "sup gap {worst}");
    assert_eq!(mu[0], 0.0);
    assert_eq!(*mu.last().unwrap(), 1.0);
}

#[test]
fn brownian_reference_local_time_at_zero() {
    let params = LfsmParams { h: 0.5, alpha: 2.0, skew: 0.0, grid: 4096, truncation: 1.0, mesh: 1 };
    let bin = 1.0 / 32.0;
    let grid = uniform_grid(-4.0, 4.0, bin);
    let j0 = grid.iter().position(|a| *a == 0.0).unwrap();
    let reps = 1000;
    let mut at_zero = Vec::with_capacity(reps);
    for r in 0..reps {
        let x = simulate_lfsm(params, 50_000 + r as u64).unwrap();
        let l = reference_local_time(&x, &grid, bin).unwrap();
        let mass: f64 = l.iter().sum::<f64>() * bin;
        assert!(l.iter().all(|v| *v >= 0.0));
        assert!(mass <= 1.0 + 1e-12);
        at_zero.push(l[j0]);
    }
    let mean = at_zero.iter().sum::<f64>() / reps as f64;
    let target = 1.0 / std::f64::consts::PI.sqrt();
    assert!((mean / target - 1.0).abs() <= 0.05, "mean {mean} vs {target}");
}

#[test]
fn kernel_fields_approach_scaled_triangular_field() {
    let g = RealFunction::gaussian();
    let tri = RealFunction::triangular();
    let grid = uniform_grid(-3.0, 3.0, 1.0 / 64.0);
    let medians: Vec<f64> = [1usize << 12, 1 << 14, 1 << 16]
        .iter()
        .map(|&n| {
            let gaps: Vec<f64> = (0..30)
                .map(|r| {
                    let p = walk(n, 900 + r);
                    let a = local_time_field(&p, &g, 1.0, &grid).unwrap();
                    let b = local_time_field(&p, &tri, 1.0, &grid).unwrap();
                    a.values.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - g.integral() * y).abs()))
                })
                .collect();
            median(&gaps)
        })
        .collect();
    assert!(medians.windows(2).all(|w| w[1] < w[0]), "{medians:?}");
}

#[test]
fn small_bandwidths_concentrate_mass() {
    let p = walk(2000, 5);
    let g = RealFunction::gaussian();
    let grid = uniform_grid(-3.0, 3.0, 1.0 / 4096.0);
    let peaks: Vec<f64> = [1.0, 0.1, 0.01]
        .iter()
        .map(|&h| {
            let f = local_time_field(&p, &g, h, &grid).unwrap();
            assert!((f.closed_form_mass() - 1.0).abs() < 1e-12);
            f.max_value()
        })
        .collect();
    assert!(peaks.windows(2).all(|w| w[1] > w[0]), "{peaks:?}");
}

#[test]
fn coverage_is_monotone_in_epsilon() {
    let eps = [0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8];
    for seed in 0..10 {
        let p = walk(1 << 12, seed);
        let field =
            local_time_field(&p, &RealFunction::epanechnikov(), 2.0, &uniform_grid(-3.0, 3.0, 1.0 / 128.0)).unwrap();
        let cov: Vec<f64> = eps.iter().map(|&e| support_set(&field, &p, e).unwrap().coverage).collect();
        assert!(cov.iter().all(|c| (0.0..=1.0).contains(c)));
        assert!(cov.windows(2).all(|w| w[1] >= w[0]), "{cov:?}");
    }
}
