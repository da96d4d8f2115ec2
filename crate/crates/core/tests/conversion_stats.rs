use ctdnull::conversion::{convert, gram_schmidt, inner, simulate_heterodyne};
use ctdnull::harness::validate_alpha_stats;
use ctdnull::{derive_statistics, RandomStream, ScenarioParams};
use num_complex::Complex64;
use rand::Rng;

fn weak_signal(modes: usize, m: usize) -> ScenarioParams {
    ScenarioParams::new(0.1, 0.01, 10.0, m, modes).unwrap()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn norm(v: &[Complex64]) -> f64 {
    inner(v, v).re.sqrt()
}

#[test]
fn signal_bin_norm_follows_chi_mean() {
    let p = weak_signal(10_000, 2);
    let root = RandomStream::new(11);
    let norms: Vec<f64> = (0..1_000)
        .map(|k| norm(&simulate_heterodyne(&p, 0, &root.child(k)).unwrap().outcomes[0]))
        .collect();
    let (mean, _) = mean_std(&norms);
    let expected = (2.0 * 10_000.0 * 5.5005f64).sqrt();
    assert!((mean / expected - 1.0).abs() < 0.01, "{mean} vs {expected}");
}

#[test]
fn vacuum_heterodyne_variance() {
    let p = ScenarioParams::new(1.0, 1.0, 0.0, 2, 50_000).unwrap();
    let rec = simulate_heterodyne(&p, 0, &RandomStream::new(2)).unwrap();
    let noise = &rec.outcomes[1];
    let n = noise.len() as f64;
    let var_re = noise.iter().map(|z| z.re * z.re).sum::<f64>() / n;
    let var_im = noise.iter().map(|z| z.im * z.im).sum::<f64>() / n;
    // s.e. of a variance estimate is σ²√(2/n) ≈ 0.0032
    assert!((var_re - 0.5).abs() < 0.02);
    assert!((var_im - 0.5).abs() < 0.02);
    let signal = &rec.outcomes[0];
    let var_sig = signal.iter().map(|z| z.norm_sqr()).sum::<f64>() / (2.0 * n);
    assert!((var_sig - 1.0).abs() < 0.03);
}

#[test]
fn random_basis_is_orthonormal_and_reconstructs() {
    let p = weak_signal(10_000, 10);
    let rec = simulate_heterodyne(&p, 4, &RandomStream::new(5)).unwrap();
    let basis = gram_schmidt(&rec.outcomes).unwrap();
    for i in 0..10 {
        for j in 0..10 {
            let g = inner(&basis.rows[i], &basis.rows[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((g - target).norm() < 1e-10, "gram[{i}][{j}] = {g}");
        }
    }
    for (n, r) in rec.outcomes.iter().enumerate() {
        let mut rebuilt = vec![Complex64::new(0.0, 0.0); r.len()];
        for row in &basis.rows[..=n] {
            let c = inner(row, r);
            for (x, y) in rebuilt.iter_mut().zip(row) {
                *x += c * y;
            }
        }
        let err: Vec<Complex64> = rebuilt.iter().zip(r).map(|(a, b)| a - b).collect();
        assert!(norm(&err) < 1e-8 * norm(r));
    }
}

#[test]
fn converted_mean_statistics() {
    let p = weak_signal(10_000, 10);
    let stats = derive_statistics(&p).unwrap();
    let root = RandomStream::new(21);
    let h = 9;
    let mut alpha = Vec::new();
    let (mut re, mut im) = (Vec::new(), Vec::new());
    for k in 0..1_000 {
        let rec = simulate_heterodyne(&p, h, &root.child(k)).unwrap();
        let conv = convert(&rec, &p).unwrap();
        assert_eq!(conv.thermal, stats.e_thermal);
        let cap = stats.c_pair * norm(&rec.outcomes[h]) / (2.0 * stats.v_het);
        assert!(conv.means.iter().all(|d| d.norm() <= cap * (1.0 + 1e-12)));
        alpha.push(conv.means[h].re);
        re.extend(conv.means[..h].iter().map(|d| d.re));
        im.extend(conv.means[..h].iter().map(|d| d.im));
    }
    let (alpha_mean, _) = mean_std(&alpha);
    assert!((alpha_mean / 0.95818 - 1.0).abs() < 0.02, "{alpha_mean}");
    let sigma = stats.c_pair / (2.0 * stats.v_het.sqrt());
    assert!((sigma - 0.006775).abs() < 1e-6);
    for xs in [&re, &im] {
        let (_, s) = mean_std(xs);
        assert!((s / sigma - 1.0).abs() < 0.2, "{s} vs {sigma}");
    }
}

#[test]
fn leakage_vanishes_after_the_signal_bin() {
    let p = weak_signal(1_000, 10);
    let stats = derive_statistics(&p).unwrap();
    let root = RandomStream::new(8);
    let mut worst: f64 = 0.0;
    for k in 0..1_000 {
        let h = root.child(k).labelled("h").rng().random_range(0..10);
        let rec = simulate_heterodyne(&p, h, &root.child(k)).unwrap();
        let conv = convert(&rec, &p).unwrap();
        let dh = conv.means[h];
        assert!(dh.im.abs() <= 1e-12 * dh.re && dh.re > 0.0);
        let expected = stats.c_pair * conv.norms[h] / (2.0 * stats.v_het);
        assert!((dh.re / expected - 1.0).abs() < 1e-9);
        for d in &conv.means[h + 1..] {
            worst = worst.max(d.norm() / dh.re);
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn alpha_one_concentrates_on_scaled_chi_law() {
    let p = weak_signal(10_000, 4);
    let report = validate_alpha_stats(&p, 1_000, &RandomStream::new(31)).unwrap();
    for gate in report.gates() {
        assert!(gate.pass, "{gate:?}");
    }
    assert!((report.alpha_mean_expected - 0.958_174_490_734_870_1).abs() < 1e-12);
    assert!((report.alpha0_var_expected - 4.5905e-5).abs() < 1e-8);
    assert!((report.fluctuation_to_noise - 0.0023165).abs() < 1e-6);
}
