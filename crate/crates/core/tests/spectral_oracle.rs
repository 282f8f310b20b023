mod common;

use abfnet::{periodogram, MONTHLY_FS};
use common::{mean_square, naive_dft};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn one_sided_bins_match_two_sided_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 2..=64usize {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let full = naive_dft(&x);
        let norm = |(re, im): (f64, f64)| (re * re + im * im) / (n * n) as f64;

        // conjugate symmetry of the real-input transform
        for k in 1..n {
            let (a, b) = (full[k], full[n - k]);
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 + b.1).abs() < 1e-9);
        }

        let s = periodogram(&x, MONTHLY_FS).unwrap();
        assert_eq!(s.power.len(), n / 2 + 1);
        let scale = mean_square(&x);
        for k in 0..=n / 2 {
            let mirrored = if k == 0 || 2 * k == n { 0.0 } else { norm(full[n - k]) };
            let expected = norm(full[k]) + mirrored;
            assert!(
                (s.power[k] - expected).abs() <= 1e-9 * scale,
                "n = {n}, k = {k}: {} vs {expected}",
                s.power[k]
            );
            assert!((s.freqs[k] - k as f64 * 12.0 / n as f64).abs() < 1e-12);
        }
        let two_sided: f64 = full.iter().map(|&c| norm(c)).sum();
        assert!((s.total_power() - two_sided).abs() <= 1e-9 * scale);
    }
}
