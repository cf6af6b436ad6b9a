mod common;

use common::{jacobi, load, triplet};
use pjd_core::apps::spt_build;
use pjd_core::moments::MomentEngine;
use pjd_core::polyalg::Polynomial;
use pjd_core::simulate::{empirical_moment, simulate, SimConfig};
use pjd_core::specmodel::construct;

fn x() -> Polynomial {
    Polynomial::var(1, 0)
}

#[test]
fn monte_carlo_agrees_with_moments() {
    let fixtures = [("jacobi", construct(&jacobi()).unwrap(), 0.2), ("reflection", triplet("reflection"), 0.1)];
    for (name, t, x0) in fixtures {
        let cfg = SimConfig::new(vec![x0], 1.0, 1e-3, 5_000, 7);
        let paths = simulate(&t, &cfg).unwrap();
        let e = MomentEngine::new(&t, 2).unwrap();
        for p in [x(), x().pow(2)] {
            let exact = e.moment(&p, &[x0], 1.0).unwrap();
            let (mean, se) = empirical_moment(&paths, &p, 1.0).unwrap();
            assert!((mean - exact).abs() <= 4.0 * se, "{name}: {mean} ± {se} vs {exact}");
        }
        assert!(paths.max_violation <= 1e-6, "{name}: {}", paths.max_violation);
    }
}

#[test]
fn sticky_level_is_left_at_the_exit_rate() {
    // From X = 1 the recovery model only moves by jumping, so the first jump time is
    // exponential with the exit rate.
    let doc = load("recovery");
    let model = doc.recovery_model().unwrap().unwrap();
    assert!(model.sticky);
    let rate = model.exit_rate().unwrap();
    let horizon = 1.0;
    let mut cfg = SimConfig::new(vec![1.0], horizon, 1e-2, 4_000, 11);
    cfg.record_jumps = true;
    let paths = simulate(model.triplet(), &cfg).unwrap();
    let mut first = vec![f64::INFINITY; paths.n_paths()];
    for j in &paths.jumps {
        first[j.path] = first[j.path].min(j.time);
        if j.time == first[j.path] {
            assert!((j.before[0] - 1.0).abs() < 1e-12, "moved before the first jump: {:?}", j.before);
        }
    }
    // Kolmogorov–Smirnov distance to 1 − e^{−λt}, censored at the horizon.
    let n = first.len() as f64;
    let mut times: Vec<f64> = first.iter().copied().filter(|t| t.is_finite()).collect();
    times.sort_by(f64::total_cmp);
    let cdf = |t: f64| 1.0 - (-rate * t).exp();
    let mut ks = 0.0f64;
    for (k, &t) in times.iter().enumerate() {
        ks = ks.max((k as f64 / n - cdf(t)).abs()).max(((k + 1) as f64 / n - cdf(t)).abs());
    }
    ks = ks.max((times.len() as f64 / n - cdf(horizon)).abs());
    assert!(ks < 1.63 / n.sqrt(), "KS distance {ks}");
}

#[test]
fn simplex_paths_stay_on_the_simplex() {
    let model = load("spt").spt_model().unwrap().clone();
    let t = spt_build(&model).unwrap();
    let cfg = SimConfig::new(vec![0.5, 0.3, 0.2], 0.5, 1e-3, 200, 3);
    let paths = simulate(&t, &cfg).unwrap();
    assert!(paths.max_sum_error <= 1e-12, "{}", paths.max_sum_error);
    for p in 0..paths.n_paths() {
        for ti in 0..paths.times.len() {
            let s = paths.state(p, ti);
            assert!(s.iter().all(|v| *v >= 0.0), "{s:?}");
            assert!((s.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
    assert!(paths.jump_counts.iter().sum::<u64>() > 0);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let t = triplet("reflection");
    let mut cfg = SimConfig::new(vec![0.3], 0.5, 1e-2, 64, 42);
    cfg.threads = Some(1);
    let one = simulate(&t, &cfg).unwrap();
    cfg.threads = Some(4);
    let four = simulate(&t, &cfg).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    one.write_csv(&mut a).unwrap();
    four.write_csv(&mut b).unwrap();
    assert_eq!(a, b);
    assert_eq!(one.jump_counts, four.jump_counts);
}

#[test]
fn seeds_change_paths() {
    let t = triplet("reflection");
    let a = simulate(&t, &SimConfig::new(vec![0.3], 0.5, 1e-2, 8, 1)).unwrap();
    let b = simulate(&t, &SimConfig::new(vec![0.3], 0.5, 1e-2, 8, 2)).unwrap();
    assert_ne!(a.state(0, a.times.len() - 1), b.state(0, b.times.len() - 1));
}

#[test]
fn recorded_grid_and_csv_layout() {
    let t = construct(&jacobi()).unwrap();
    let mut cfg = SimConfig::new(vec![0.2], 0.25, 0.01, 3, 5);
    cfg.record_every = 10;
    let paths = simulate(&t, &cfg).unwrap();
    assert_eq!(paths.times.len(), 4);
    assert!((paths.times[3] - 0.25).abs() < 1e-15);
    let mut buf = Vec::new();
    paths.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,path_id,x_1"));
    assert_eq!(lines.count(), 3 * 4);
    assert!(empirical_moment(&paths, &x(), 0.123).is_err());
}

#[test]
fn bad_configurations_are_rejected() {
    let t = construct(&jacobi()).unwrap();
    let ok = SimConfig::new(vec![0.2], 1.0, 0.01, 10, 1);
    let cases = [
        SimConfig { n_paths: 0, ..ok.clone() },
        SimConfig { dt: 0.0, ..ok.clone() },
        SimConfig { horizon: -1.0, ..ok.clone() },
        SimConfig { x0: vec![1.2], ..ok.clone() },
    ];
    for cfg in cases {
        assert!(simulate(&t, &cfg).is_err(), "{cfg:?}");
    }
}
