use super::*;
use crate::sampling::{gaussian_vector, random_permutation, random_signs, rng_for};
use rand::Rng;

fn corpus(n: usize) -> Vec<NormSpec> {
    let pw = YoungFunction::piecewise_linear(vec![0.0, 0.5], vec![0.5, 2.0], None).unwrap();
    let mut specs = vec![
        NormSpec::lp(n, 1.0).unwrap(),
        NormSpec::lp(n, 1.5).unwrap(),
        NormSpec::lp(n, 2.0).unwrap(),
        NormSpec::lp(n, 3.0).unwrap(),
        NormSpec::lp(n, f64::INFINITY).unwrap(),
        NormSpec::owl((0..n).map(|i| (n - i) as f64).collect()).unwrap(),
        NormSpec::perm_mix(n, 2.0, 1.0, 0.5).unwrap(),
        NormSpec::luxemburg(vec![YoungFunction::power(3.0).unwrap(); n]).unwrap(),
        NormSpec::luxemburg(
            (0..n)
                .map(|i| match i % 3 {
                    0 => YoungFunction::power(2.0).unwrap(),
                    1 => YoungFunction::indicator(1.5).unwrap(),
                    _ => pw.clone(),
                })
                .collect(),
        )
        .unwrap(),
        NormSpec::amemiya(vec![YoungFunction::power(2.0).unwrap(); n]).unwrap(),
        NormSpec::scaled(
            NormSpec::lp(n, 4.0).unwrap(),
            LinearMap::Diagonal((0..n).map(|i| 1.0 + 0.1 * i as f64).collect()),
        )
        .unwrap(),
    ];
    if n >= 2 {
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 2.0;
            row[(i + 1) % n] += 0.5;
        }
        specs.push(NormSpec::scaled(NormSpec::lp(n, 2.0).unwrap(), LinearMap::General(m)).unwrap());
    }
    specs
}

#[test]
fn norm_eval_examples() {
    let l2 = NormSpec::luxemburg(vec![YoungFunction::power(2.0).unwrap(); 2]).unwrap();
    assert!((l2.norm_eval(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-12);

    let linf = NormSpec::luxemburg(vec![YoungFunction::indicator(1.0).unwrap(); 2]).unwrap();
    assert_eq!(linf.norm_eval(&[3.0, 1.0]).unwrap(), 3.0);

    let owl = NormSpec::owl(vec![2.0, 1.0]).unwrap();
    assert_eq!(owl.norm_eval(&[-1.0, 3.0]).unwrap(), 7.0);

    assert!(matches!(owl.norm_eval(&[1.0]), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(owl.norm_eval(&[1.0, f64::NAN]), Err(Error::NonFinite(1))));
}

#[test]
fn amemiya_linear_tail_reaches_l1_in_the_limit() {
    let am = NormSpec::amemiya(vec![YoungFunction::power(1.0).unwrap(); 2]).unwrap();
    // Grid oracle over λ: (1/λ)(2λ + 1) = 2 + 1/λ, so 2.1 at λ = 10 and
    // decreasing towards 2.
    let objective = |lam: f64| (2.0 * lam + 1.0) / lam;
    assert!((objective(10.0) - 2.1).abs() < 1e-15);
    let grid_min = (1..=1000).map(|k| objective(k as f64 * 1e3)).fold(f64::INFINITY, f64::min);
    let v = am.amemiya_eval(&[1.0, 1.0]).unwrap().unwrap();
    assert!(v.value <= grid_min + 1e-12);
    assert!((v.value - 2.0).abs() < 1e-5, "{v:?}");
    assert!(!v.converged);
}

#[test]
fn amemiya_quadratic_is_twice_euclidean() {
    // inf_λ λ‖x‖² + 1/λ = 2‖x‖₂.
    let am = NormSpec::amemiya(vec![YoungFunction::power(2.0).unwrap(); 3]).unwrap();
    let mut rng = rng_for(1, 0);
    for _ in 0..200 {
        let x = gaussian_vector(&mut rng, 3);
        let v = am.amemiya_eval(&x).unwrap().unwrap();
        assert!((v.value - 2.0 * lp_norm(&x, 2.0)).abs() < 1e-9 * (1.0 + v.value));
        assert!(v.converged);
    }
}

#[test]
fn luxemburg_matches_closed_form_lp() {
    let mut rng = rng_for(2, 0);
    for &p in &[1.0, 1.5, 2.0, 3.0, 10.0] {
        for n in 2..=8 {
            let lux = NormSpec::luxemburg(vec![YoungFunction::power(p).unwrap(); n]).unwrap();
            for _ in 0..1000 / 7 + 1 {
                let x = gaussian_vector(&mut rng, n);
                let a = lux.norm_eval(&x).unwrap();
                let b = lp_norm(&x, p);
                assert!((a - b).abs() <= 1e-10, "p={p} n={n} {a} vs {b}");
            }
        }
    }
}

#[test]
fn luxemburg_unit_sphere_modular_is_one() {
    let fs = vec![
        YoungFunction::power(2.0).unwrap(),
        YoungFunction::piecewise_linear(vec![0.0, 0.3], vec![0.5, 2.0], None).unwrap(),
        YoungFunction::affine_mix(YoungFunction::power(3.0).unwrap(), 0.7, 0.2).unwrap(),
    ];
    let spec = NormSpec::luxemburg(fs.clone()).unwrap();
    let mut rng = rng_for(3, 0);
    for _ in 0..1000 {
        let x = gaussian_vector(&mut rng, 3);
        let r = spec.norm_eval(&x).unwrap();
        let m: f64 = fs.iter().zip(&x).map(|(f, v)| f.value(v.abs() / r)).sum();
        assert!((m - 1.0).abs() <= 1e-9, "modular {m}");
    }
}

#[test]
fn norm_axioms_hold_on_samples() {
    for n in [2usize, 3, 5] {
        for spec in corpus(n) {
            let mut rng = rng_for(4, n as u64);
            for _ in 0..1000 {
                let x = gaussian_vector(&mut rng, n);
                let y = gaussian_vector(&mut rng, n);
                let lam: f64 = rng.random_range(-3.0..3.0);
                let nx = spec.norm_eval(&x).unwrap();
                let ny = spec.norm_eval(&y).unwrap();
                assert!(nx > 0.0);
                let xs: Vec<f64> = x.iter().map(|v| lam * v).collect();
                let nl = spec.norm_eval(&xs).unwrap();
                assert!((nl - lam.abs() * nx).abs() <= 1e-10 * (1.0 + nl), "{spec:?} homogeneity");
                let s: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
                assert!(spec.norm_eval(&s).unwrap() <= nx + ny + 1e-10 * (1.0 + nx + ny), "{spec:?} triangle");
            }
            assert_eq!(spec.norm_eval(&vec![0.0; n]).unwrap(), 0.0);
        }
    }
}

#[test]
fn monotone_on_unconditional_specs() {
    for spec in corpus(4) {
        if !spec.flags().unconditional {
            continue;
        }
        let mut rng = rng_for(5, 0);
        for _ in 0..1000 {
            let y = gaussian_vector(&mut rng, 4);
            let x: Vec<f64> = y.iter().map(|v| v * rng.random_range(-1.0..1.0)).collect();
            assert!(spec.norm_eval(&x).unwrap() <= spec.norm_eval(&y).unwrap() + 1e-10);
        }
    }
}

#[test]
fn permutation_and_sign_invariance_match_flags() {
    for spec in corpus(5) {
        let f = spec.flags();
        let mut rng = rng_for(6, 0);
        for _ in 0..100 {
            let x = gaussian_vector(&mut rng, 5);
            let base = spec.norm_eval(&x).unwrap();
            if f.permutation_invariant {
                let p = random_permutation(&mut rng, 5);
                let px: Vec<f64> = p.iter().map(|&i| x[i]).collect();
                assert!((spec.norm_eval(&px).unwrap() - base).abs() <= 1e-12 * (1.0 + base), "{spec:?}");
            }
            if f.unconditional {
                let s = random_signs(&mut rng, 5);
                let sx: Vec<f64> = s.iter().zip(&x).map(|(a, b)| a * b).collect();
                assert!((spec.norm_eval(&sx).unwrap() - base).abs() <= 1e-11 * (1.0 + base), "{spec:?}");
            }
        }
    }
}

#[test]
fn flags_follow_family() {
    let owl = NormSpec::owl(vec![3.0, 2.0, 1.0]).unwrap().flags();
    assert!(owl.permutation_invariant && owl.unconditional && !owl.smooth);
    let pm = NormSpec::perm_mix(3, 2.0, 1.0, 0.5).unwrap().flags();
    assert!(pm.permutation_invariant && !pm.unconditional && !pm.smooth);
    assert!(NormSpec::lp(3, 2.0).unwrap().flags().smooth);
    assert!(!NormSpec::lp(3, 1.0).unwrap().flags().smooth);
    let diag = NormSpec::scaled(NormSpec::lp(3, 2.0).unwrap(), LinearMap::Diagonal(vec![1.0, 2.0, 3.0])).unwrap();
    assert!(!diag.flags().permutation_invariant && diag.flags().unconditional);
    let general =
        NormSpec::scaled(NormSpec::lp(2, 2.0).unwrap(), LinearMap::General(vec![vec![1.0, 0.0], vec![0.0, 1.0]]))
            .unwrap()
            .flags();
    assert!(!general.permutation_invariant && !general.unconditional && general.smooth);
    assert!(NormSpec::scaled(NormSpec::lp(2, 2.0).unwrap(), LinearMap::General(vec![vec![1.0, 2.0], vec![2.0, 4.0]]))
        .is_err());
}

#[test]
fn json_schema_examples_parse() {
    let texts = [
        r#"{"dim":4,"family":{"lp":{"p":2.0}}}"#,
        r#"{"dim":4,"family":{"lp":{"p":"inf"}}}"#,
        r#"{"dim":3,"family":{"musielak_orlicz":{"gauge":"luxemburg","functions":[{"power":{"p":2.0}},{"indicator":{"b":1.0}},{"piecewise_linear":{"breakpoints":[0.0,1.0],"slopes":[1.0,3.0]}}]}}}"#,
        r#"{"dim":5,"family":{"linfty_hyperplane":{"a":[1,1,1,1,1]}}}"#,
        r#"{"dim":3,"family":{"owl":{"w":[2,1,1]}}}"#,
        r#"{"dim":3,"family":{"perm_mix":{"p":2,"alpha":1,"beta":0.5}}}"#,
        r#"{"dim":2,"family":{"scaled":{"base":{"dim":2,"family":{"lp":{"p":4}}},"t":{"diagonal":[1.0,1.1]}}}}"#,
    ];
    for t in texts {
        let spec = NormSpec::from_json(t).unwrap_or_else(|e| panic!("{t}: {e}"));
        let back = serde_json::to_string(&spec).unwrap();
        assert_eq!(NormSpec::from_json(&back).unwrap(), spec);
    }
    assert!(matches!(
        NormSpec::from_json(r#"{"dim":2,"family":{"owl":{"w":[1]}}}"#),
        Err(NormSpecParseError::Invalid(_))
    ));
    assert!(matches!(NormSpec::from_json(r#"{"dim":2,"#), Err(NormSpecParseError::Json(_))));
}

#[test]
fn modulus_of_smoothness_euclidean() {
    // Dense-grid oracle over a 2-D section: x = (cos a, sin a), y = (cos b, sin b).
    let t = 0.1;
    let steps = 720;
    let mut grid_sup = f64::NEG_INFINITY;
    for i in 0..steps {
        let a = i as f64 * std::f64::consts::TAU / steps as f64;
        for j in 0..steps {
            let b = j as f64 * std::f64::consts::TAU / steps as f64;
            let (x, y) = ([a.cos(), a.sin()], [b.cos(), b.sin()]);
            let p = lp_norm(&[x[0] + t * y[0], x[1] + t * y[1]], 2.0);
            let m = lp_norm(&[x[0] - t * y[0], x[1] - t * y[1]], 2.0);
            grid_sup = grid_sup.max(0.5 * (p + m) - 1.0);
        }
    }
    assert!((grid_sup - ((1.0f64 + t * t).sqrt() - 1.0)).abs() < 1e-9);
    let spec = NormSpec::lp(3, 2.0).unwrap();
    let est = modulus_of_smoothness(&spec, t, 100, 0).unwrap();
    assert!((est - grid_sup).abs() < 1e-3, "{est} vs {grid_sup}");
    assert!(est <= grid_sup + 1e-12);
}

#[test]
fn modulus_of_smoothness_caps_and_budget_monotonicity() {
    for spec in [NormSpec::lp(3, 3.0).unwrap(), NormSpec::owl(vec![2.0, 1.0, 1.0]).unwrap()] {
        let mut prev = f64::INFINITY;
        for &t in &[0.5, 0.1, 1e-2, 1e-4] {
            let r = modulus_of_smoothness(&spec, t, 100, 1).unwrap();
            assert!(r <= t && r >= 0.0);
            assert!(r <= prev);
            prev = r;
        }
        let small = modulus_of_smoothness(&spec, 0.3, 100, 9).unwrap();
        let large = modulus_of_smoothness(&spec, 0.3, 250, 9).unwrap();
        assert!(large >= small);
    }
    assert!(modulus_of_smoothness(&NormSpec::lp(2, 2.0).unwrap(), 0.1, 10, 0).is_err());
}

#[test]
fn modulus_of_smoothness_l1_is_maximal() {
    // x = e1, y = e2: (‖e1 + t e2‖₁ + ‖e1 − t e2‖₁)/2 − 1 = t.
    let spec = NormSpec::lp(3, 1.0).unwrap();
    let r = modulus_of_smoothness(&spec, 0.5, 100, 0).unwrap();
    assert!(r >= 0.5 - 1e-15);
}

#[test]
fn eps0_grid_walk() {
    // ρ(ε) = √(1+ε²) − 1: at 1/8 the ratio is ≈ 0.0622 > 1/18, at 1/16 ≈ 0.0312.
    let rho = |e: f64| (1.0 + e * e).sqrt() - 1.0;
    assert!(rho(0.125) / 0.125 > 1.0 / 18.0);
    assert!(rho(0.0625) / 0.0625 <= 1.0 / 18.0);
    let l2 = NormSpec::lp(3, 2.0).unwrap();
    assert_eq!(find_eps0(&l2, 3, 100, 0).unwrap(), 1.0 / 16.0);
    let l4 = NormSpec::lp(3, 4.0).unwrap();
    assert!(find_eps0(&l4, 3, 200, 0).unwrap() > 0.0);
    assert!(matches!(find_eps0(&NormSpec::lp(3, 1.0).unwrap(), 3, 100, 0), Err(Error::SmoothnessBudget(_))));
}

#[test]
fn supporting_functional_examples() {
    let l2 = supporting_functional_symmetric(&NormSpec::lp(3, 2.0).unwrap()).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((l2.c - s).abs() < 1e-15);
    assert!((l2.functional[0] - s).abs() < 1e-15 && (l2.functional[1] - s).abs() < 1e-15);
    assert_eq!(l2.functional[2], 0.0);

    assert!(matches!(supporting_functional_symmetric(&NormSpec::lp(3, 1.0).unwrap()), Err(Error::Capability(_))));

    let spec = NormSpec::lp(4, 4.0).unwrap();
    let sf = supporting_functional_symmetric(&spec).unwrap();
    assert!((sf.c - 2f64.powf(-0.25)).abs() < 1e-15);
    let v = [sf.c, sf.c, 0.0, 0.0];
    assert!((sf.apply(&v) - 1.0).abs() < 1e-12);
    let mut rng = rng_for(8, 0);
    for _ in 0..1000 {
        let x = gaussian_vector(&mut rng, 4);
        assert!(sf.apply(&x).abs() <= spec.norm_eval(&x).unwrap() + 1e-9);
    }
}
