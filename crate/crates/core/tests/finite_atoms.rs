use pjd_core::generator::finite_atom_intensities;
use pjd_core::polyalg::{parse_expr, Polynomial, StateSpace};

fn p(s: &str) -> Polynomial {
    parse_expr(s, StateSpace::Interval).unwrap()
}

fn grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn four_atoms() -> (Vec<Polynomial>, Vec<Polynomial>) {
    let gammas = vec![p("-x"), p("1 - x"), p("(1 - 2*x)/3"), p("2*(1 - 2*x)/3")];
    // r₅ as implied by the printed intensities; the printed r₅ carries +1 in place of −1.
    let r = vec![p("1"), p("(1 - 2*x)/2"), p("(2*x^2 - 2*x + 5)/18"), p("(2*x - 1)*(5*x^2 - 5*x - 1)/6")];
    (gammas, r)
}

fn three_atoms() -> (Vec<Polynomial>, Vec<Polynomial>) {
    let gammas = vec![p("-x"), p("(1 - x)/2"), p("(1 - 2*x)/3")];
    let r = vec![p("1"), p("(1 - 2*x)/2"), p("(10*x^2 - 9*x + 3)/12")];
    (gammas, r)
}

fn close(got: f64, want: f64) -> bool {
    (got - want).abs() <= 1e-9 * want.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn four_atom_intensities_match_printed_values() {
    let (g, r) = four_atoms();
    let lam = finite_atom_intensities(&g, &r).unwrap();
    let printed: [fn(f64) -> f64; 4] = [
        |x| 4.5 * (1.0 - x) / (x * (x + 1.0) * (2.0 - x)),
        |x| 4.5 * x / ((1.0 - x) * (x + 1.0) * (2.0 - x)),
        |x| 9.0 / ((x + 1.0) * (2.0 - x)),
        |x| 2.25 / ((x + 1.0) * (2.0 - x)),
    ];
    for x in grid() {
        for (l, (f, want)) in lam.iter().zip(printed).enumerate() {
            assert!(close(f.eval(&[x]), want(x)), "lambda_{} at {x}: {} vs {}", l + 1, f.eval(&[x]), want(x));
        }
    }
}

#[test]
fn three_atom_intensities_match_printed_values() {
    let (g, r) = three_atoms();
    let lam = finite_atom_intensities(&g, &r).unwrap();
    let printed: [fn(f64) -> f64; 3] = [
        |x| 1.0 / (x * (x + 1.0).powi(2)),
        |x| 4.0 * (2.0 * x + 1.0) / ((1.0 - x) * (x + 1.0).powi(2)),
        |x| 27.0 * x * x / ((1.0 - 2.0 * x).powi(2) * (x + 1.0).powi(2)),
    ];
    for x in grid() {
        for (l, (f, want)) in lam.iter().zip(printed).enumerate() {
            if !want(x).is_finite() {
                // λ₃ has its pole at the zero of γ₃, where the kernel puts no mass.
                assert!(f.is_excluded(&[x]));
                continue;
            }
            assert!(close(f.eval(&[x]), want(x)), "lambda_{} at {x}: {} vs {}", l + 1, f.eval(&[x]), want(x));
        }
    }
}

#[test]
fn intensities_reproduce_the_input_moments() {
    for (g, r) in [four_atoms(), three_atoms()] {
        let lam = finite_atom_intensities(&g, &r).unwrap();
        for x in [0.13, 0.37, 0.71, 0.94] {
            for (n, rn) in r.iter().enumerate() {
                let k = n as i32 + 2;
                let sum: f64 = lam.iter().zip(&g).map(|(l, gl)| l.eval(&[x]) * gl.eval(&[x]).powi(k)).sum();
                assert!((sum - rn.eval(&[x])).abs() < 1e-10, "r_{k} at {x}");
            }
        }
    }
}

#[test]
fn single_unit_atom() {
    let lam = finite_atom_intensities(&[p("-x")], &[p("x^2")]).unwrap();
    for x in grid() {
        assert!((lam[0].eval(&[x]) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn coinciding_jump_sizes_are_rejected() {
    let err = finite_atom_intensities(&[p("-x"), p("-x")], &[p("1"), p("x")]).unwrap_err();
    assert!(err.to_string().contains("coincide"), "{err}");
}
