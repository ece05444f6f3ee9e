//! Two-beam-splitter singles-rate model: forward rates from an amplitude
//! and the inversion recovering Im(a) exactly and |Re(a)| up to sign.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Idealized normalized singles rates at the two output ports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglesRates {
    pub n_plus: f64,
    pub n_minus: f64,
}

/// Inversion result. The sign of the real part is unrecoverable from two
/// rates, so only its magnitude is returned and the flag is always set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveredAmplitude {
    pub re_magnitude: f64,
    pub im: f64,
    pub sign_ambiguous: bool,
}

/// Forward model: n_plus = |a + i|^2, n_minus = |i a + 1|^2.
pub fn singles_rates(a: Complex64) -> SinglesRates {
    let i = Complex64::new(0.0, 1.0);
    SinglesRates { n_plus: (a + i).norm_sqr(), n_minus: (i * a + 1.0).norm_sqr() }
}

/// Radicand of the |Re| recovery; non-negative for any realizable rate pair
/// up to rounding.
fn re_radicand(rates: SinglesRates) -> f64 {
    let d = rates.n_plus - rates.n_minus;
    rates.n_plus - 1.0 - d / 2.0 - (d / 4.0) * (d / 4.0)
}

/// Invert a rate pair: Im(a) = (n_plus - n_minus) / 4 exactly;
/// |Re(a)| = sqrt(n_plus - 1 - (n_plus - n_minus)/2 - (n_plus - n_minus)^2/16).
///
/// Radicands in [-1e-9, 0) clamp to zero; anything lower means the pair
/// cannot come from a single amplitude and is rejected.
pub fn invert_rates(rates: SinglesRates) -> Result<RecoveredAmplitude> {
    let im = (rates.n_plus - rates.n_minus) / 4.0;
    let rad = re_radicand(rates);
    if rad < -1e-9 {
        return Err(Error::InconsistentRates(rad));
    }
    Ok(RecoveredAmplitude { re_magnitude: rad.max(0.0).sqrt(), im, sign_ambiguous: true })
}

/// Split a photon budget across the two ports and draw Poisson counts with
/// means photons * n_plus/(n_plus+n_minus) and photons * n_minus/(...).
/// Deterministic per seed; a zero mean yields zero counts.
pub fn simulate_counts(rates: SinglesRates, photons: u64, seed: u64) -> (u64, u64) {
    let total = rates.n_plus + rates.n_minus;
    if total <= 0.0 || photons == 0 {
        return (0, 0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |mean: f64| -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let v: f64 = Poisson::new(mean).expect("positive finite mean").sample(&mut rng);
        v as u64
    };
    let plus = draw(photons as f64 * rates.n_plus / total);
    let minus = draw(photons as f64 * rates.n_minus / total);
    (plus, minus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn forward_rates_at_reference_points() {
        let r = singles_rates(Complex64::new(0.0, 0.0));
        assert_eq!((r.n_plus, r.n_minus), (1.0, 1.0));
        let r = singles_rates(Complex64::new(1.0, 0.0));
        assert!((r.n_plus - 2.0).abs() < 1e-15 && (r.n_minus - 2.0).abs() < 1e-15);
        let r = singles_rates(Complex64::new(0.0, 1.0));
        assert!((r.n_plus - 4.0).abs() < 1e-15 && r.n_minus.abs() < 1e-15);
    }

    #[test]
    fn inversion_at_reference_points() {
        let r = invert_rates(SinglesRates { n_plus: 4.0, n_minus: 0.0 }).unwrap();
        assert!(r.re_magnitude.abs() < 1e-12 && (r.im - 1.0).abs() < 1e-15);
        let r = invert_rates(SinglesRates { n_plus: 2.0, n_minus: 2.0 }).unwrap();
        assert!((r.re_magnitude - 1.0).abs() < 1e-12 && r.im.abs() < 1e-15);
        let r = invert_rates(SinglesRates { n_plus: 1.0, n_minus: 1.0 }).unwrap();
        assert!(r.re_magnitude.abs() < 1e-12 && r.im.abs() < 1e-15);
        assert!(r.sign_ambiguous);
    }

    #[test]
    fn round_trip_over_seeded_amplitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let mag: f64 = rng.gen::<f64>();
            let phase: f64 = (rng.gen::<f64>() - 0.5) * std::f64::consts::PI; // Re >= 0
            let a = Complex64::from_polar(mag, phase);
            let rec = invert_rates(singles_rates(a)).unwrap();
            assert!((rec.re_magnitude - a.re).abs() < 1e-12, "a = {a}");
            assert!((rec.im - a.im).abs() < 1e-12, "a = {a}");
        }
    }

    #[test]
    fn squared_difference_radicand_is_the_form_that_round_trips() {
        // the sign-flipped variant (n+^2 - n-^2 - 2 n+ n-)/16 does not invert
        // the forward model
        let a = Complex64::new(0.5, 0.3);
        let r = singles_rates(a);
        let good = invert_rates(r).unwrap().re_magnitude;
        assert!((good - 0.5).abs() < 1e-12);
        let flipped =
            (r.n_plus * r.n_plus - r.n_minus * r.n_minus - 2.0 * r.n_plus * r.n_minus) / 16.0;
        let bad = flipped.max(0.0).sqrt();
        assert!((bad - 0.5).abs() > 0.05, "variant unexpectedly recovered Re: {bad}");
    }

    #[test]
    fn infeasible_rates_are_rejected() {
        // n_plus = n_minus = 0 would need |a+i| = |ia+1| = 0, impossible
        match invert_rates(SinglesRates { n_plus: 0.0, n_minus: 0.0 }) {
            Err(Error::InconsistentRates(_)) => {}
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn modulus_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a = Complex64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0);
            let r = singles_rates(a);
            let im = (r.n_plus - r.n_minus) / 4.0;
            assert!((r.n_plus - 2.0 * im - 1.0 - a.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rate_port_never_counts() {
        let (plus, _minus) = simulate_counts(SinglesRates { n_plus: 0.0, n_minus: 3.0 }, 100000, 5);
        assert_eq!(plus, 0);
    }

    #[test]
    fn counts_are_deterministic_per_seed() {
        let r = SinglesRates { n_plus: 1.3, n_minus: 0.4 };
        assert_eq!(simulate_counts(r, 10000, 99), simulate_counts(r, 10000, 99));
        assert_ne!(simulate_counts(r, 10000, 99), simulate_counts(r, 10000, 100));
    }

    #[test]
    fn balanced_rates_concentrate_at_large_budget() {
        let (p, m) = simulate_counts(SinglesRates { n_plus: 2.0, n_minus: 2.0 }, 100_000_000, 1);
        let ratio = p as f64 / m as f64;
        assert!((ratio - 1.0).abs() < 3e-4, "ratio {ratio}");
    }
}
