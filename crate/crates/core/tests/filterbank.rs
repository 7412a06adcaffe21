mod common;

use std::f64::consts::PI;

use common::{convolve, dtft_mag, gaussian_vec, prototype_edge, regressor_at, stopband_db, worst_cross_correlation, GRID};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sarnsaf::filterbank::{design_prototype, modulate, AnalysisBank, PrototypeFilter, POWER_COMPLEMENTARITY_TOLERANCE};
use sarnsaf::saf::SafState;
use sarnsaf::Error;

fn default_bank() -> (PrototypeFilter, AnalysisBank) {
    let p = design_prototype(4, 33, 60.0).unwrap();
    let bank = modulate(&p, 4);
    (p, bank)
}

#[test]
fn default_bank_meets_sixty_db() {
    let (p, bank) = default_bank();
    let edge = prototype_edge(p.coefficients(), 60.0);
    assert!(edge < 3.0 * PI / 8.0, "edge {edge}");
    for i in 0..4 {
        let centre = (2 * i + 1) as f64 * PI / 8.0;
        let att = stopband_db(bank.filter(i), centre, edge);
        assert!(att >= 60.0, "band {i}: {att:.2} dB");
    }
}

#[test]
fn prototype_is_lowpass_by_the_target() {
    for (n, l, a) in [(4, 33, 60.0), (2, 32, 50.0), (8, 96, 60.0)] {
        let p = design_prototype(n, l, a).unwrap();
        let c = p.coefficients();
        let ratio = 20.0 * (dtft_mag(c, 0.0) / dtft_mag(c, PI)).log10();
        assert!(ratio >= a, "N={n} L={l}: {ratio:.1} dB");
        for k in 0..l {
            assert_eq!(c[k], c[l - 1 - k]);
        }
    }
}

#[test]
fn default_bank_is_power_complementary() {
    let (_, bank) = default_bank();
    let sums: Vec<f64> = (0..GRID)
        .map(|j| {
            let w = PI * j as f64 / GRID as f64;
            (0..4).map(|i| dtft_mag(bank.filter(i), w).powi(2)).sum()
        })
        .collect();
    let c = sums.iter().sum::<f64>() / sums.len() as f64;
    let err = sums.iter().map(|s| (s - c).abs()).fold(0.0, f64::max) / c;
    assert!(err < POWER_COMPLEMENTARITY_TOLERANCE, "{err}");
}

#[test]
fn passbands_sit_on_their_centres() {
    let (_, bank) = default_bank();
    let bin = 2.0 * PI / 64.0;
    for i in 0..4 {
        let h = bank.filter(i);
        let centre = (2 * i + 1) as f64 * PI / 8.0;
        let (mut num, mut den, mut peak, mut peak_w) = (0.0, 0.0, 0.0, 0.0);
        for j in 0..GRID {
            let w = PI * (j as f64 + 0.5) / GRID as f64;
            let m = dtft_mag(h, w);
            num += w * m * m;
            den += m * m;
            if m > peak {
                peak = m;
                peak_w = w;
            }
        }
        assert!((num / den - centre).abs() < bin, "band {i} centroid {}", num / den);
        let (lo, hi) = (i as f64 * PI / 4.0, (i + 1) as f64 * PI / 4.0);
        assert!(peak_w >= lo && peak_w <= hi, "band {i} peak at {peak_w}");
    }
}

#[test]
fn infeasible_lengths_fail_loudly() {
    for l in [8, 12, 17] {
        assert!(matches!(design_prototype(4, l, 60.0), Err(Error::Design(_))), "L={l}");
    }
    assert!(design_prototype(4, 33, 200.0).is_err());
}

#[test]
fn analysis_is_convolution() {
    let (_, bank) = default_bank();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = gaussian_vec(&mut rng, 300);
    let y = bank.analyze(&x);
    for (i, band) in y.iter().enumerate() {
        let want = convolve(bank.filter(i), &x);
        for (got, want) in band.iter().zip(&want) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}

#[test]
fn decimated_regressors_come_from_band_streams() {
    let (_, bank) = default_bank();
    let taps = 40;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = gaussian_vec(&mut rng, 400);
    let block = bank.analyze(&x);
    let mut analyzer = bank.analyzer();
    let mut state = SafState::new(taps, 4, 0.0).unwrap();
    let mut out = [0.0; 4];
    for (n, &s) in x.iter().enumerate() {
        analyzer.push(s, &mut out);
        state.push_band_samples(&out);
        if n % 4 == 0 {
            for i in 0..4 {
                assert!((out[i] - block[i][n]).abs() < 1e-12);
                let want = regressor_at(&block[i], n, taps);
                for (a, b) in state.regressor(i).iter().zip(&want) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn decimated_band_regressors_are_nearly_uncorrelated() {
    let (_, bank) = default_bank();
    let taps = 512;
    let mut rng = ChaCha8Rng::seed_from_u64(2022);
    let x = gaussian_vec(&mut rng, 100_000);
    let y = bank.analyze(&x);
    let worst = worst_cross_correlation(&y, taps);
    assert!(worst < 0.05, "{worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn analysis_is_linear(
        x in prop::collection::vec(-10.0f64..10.0, 1..80),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        let (_, bank) = default_bank();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = gaussian_vec(&mut rng, x.len());
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (fx, fy, fm) = (bank.analyze(&x), bank.analyze(&y), bank.analyze(&mix));
        for i in 0..4 {
            for n in 0..x.len() {
                prop_assert!((fm[i][n] - a * fx[i][n] - b * fy[i][n]).abs() < 1e-10);
            }
        }
    }
}
