use ctdnull::harness::{estimate_error, BinAssignment, TrialCampaign};
use ctdnull::receiver::{error_pair_for, run_with_amplitudes};
use ctdnull::theory::{cn_error_ideal, decision_distribution};
use ctdnull::{derive_statistics, RandomStream, ScenarioParams};
use num_complex::Complex64;
use rand::Rng;

/// Means with amplitude `alpha` on mode `h` only.
fn exact_means(m: usize, h: usize, alpha: f64) -> Vec<Complex64> {
    let mut means = vec![Complex64::new(0.0, 0.0); m];
    means[h] = Complex64::new(alpha, 0.0);
    means
}

fn binomial_se(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn full_chain_matches_recursion_at_alpha_squared_five() {
    // α₁² = κN_S(N_S+1)M/(N_B+κN_S+1) = 5
    let p = ScenarioParams::new(0.1, 0.01, 10.0, 10, 54_460).unwrap();
    let a1 = derive_statistics(&p).unwrap().alpha_one;
    assert!((a1 * a1 - 5.0).abs() < 1e-3);
    let est = estimate_error(&TrialCampaign::new(p, 10_000, 77)).unwrap();
    assert!(
        est.within(3.0),
        "p_hat {} predicted {} se {}",
        est.p_hat,
        est.predicted,
        est.std_err
    );
}

#[test]
fn noiseless_modes_converge_to_ideal_closed_form() {
    let m = 8;
    let trials = 10_000u64;
    for alpha_sq in [0.5, 2.0, 4.0] {
        let alpha = f64::sqrt(alpha_sq);
        let nulls = vec![alpha; m];
        let root = RandomStream::new(3);
        let errors = (0..trials)
            .filter(|&t| {
                let mut rng = root.child(t).rng();
                let h = rng.random_range(0..m);
                let d = run_with_amplitudes(&exact_means(m, h, alpha), 0.0, &nulls, &mut rng)
                    .unwrap();
                d.chosen_bin != h
            })
            .count();
        let p_hat = errors as f64 / trials as f64;
        let exact = cn_error_ideal(m, alpha).unwrap().exact;
        assert!(
            (p_hat - exact).abs() <= 3.0 * binomial_se(exact, trials),
            "alpha^2={alpha_sq}: {p_hat} vs {exact}"
        );
    }
}

#[test]
fn error_falls_with_alpha_under_common_random_numbers() {
    // α ≤ 2 keeps every step well above the false-alarm floor, where the
    // error no longer depends on α
    let m = 6;
    let thermal = 0.01;
    let trials = 5_000u64;
    let root = RandomStream::new(12);
    let mut last = u64::MAX;
    for k in 0..=8 {
        let alpha = 0.25 * k as f64;
        let nulls = vec![alpha; m];
        let errors = (0..trials)
            .filter(|&t| {
                let mut rng = root.child(t).rng();
                let h = rng.random_range(0..m);
                run_with_amplitudes(&exact_means(m, h, alpha), thermal, &nulls, &mut rng)
                    .unwrap()
                    .chosen_bin
                    != h
            })
            .count() as u64;
        assert!(errors <= last, "alpha={alpha}: {errors} > {last}");
        last = errors;
    }
}

#[test]
fn decision_distribution_matches_path_enumeration_for_every_bin() {
    let (m, thermal, alpha) = (5, 0.2, 1.2);
    let pair = error_pair_for(alpha, thermal).unwrap();
    let trials = 20_000u64;
    let nulls = vec![alpha; m];
    for h in 0..m {
        let expected = decision_distribution(m, &pair, h).unwrap();
        let root = RandomStream::new(40 + h as u64);
        let mut counts = vec![0u64; m];
        for t in 0..trials {
            let d = run_with_amplitudes(
                &exact_means(m, h, alpha),
                thermal,
                &nulls,
                &mut root.child(t).rng(),
            )
            .unwrap();
            assert!(d.is_consistent(m));
            counts[d.chosen_bin] += 1;
        }
        for (j, (&c, &q)) in counts.iter().zip(&expected).enumerate() {
            let f = c as f64 / trials as f64;
            let tol = 4.0 * binomial_se(q, trials) + 1e-12;
            assert!((f - q).abs() <= tol, "h={h} decision {j}: {f} vs {q}");
        }
    }
}

#[test]
fn fixed_bin_campaigns_cover_every_position() {
    let p = ScenarioParams::new(0.1, 0.01, 10.0, 4, 20_000).unwrap();
    for h in 0..4 {
        let c = TrialCampaign {
            h_assignment: BinAssignment::Fixed(h),
            ..TrialCampaign::new(p.clone(), 300, 5)
        };
        let est = estimate_error(&c).unwrap();
        assert!(est.p_hat < 0.5, "h={h}: {}", est.p_hat);
    }
}
