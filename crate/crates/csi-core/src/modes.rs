//! Laguerre-Gauss mode fields evaluated at arbitrary sample points.
//!
//! Every length is expressed in units of the beam waist unless a
//! [`BeamGeometry`] with a different waist is supplied. The fixed per-mode
//! global phase (the Gouy-like constant at a single transverse plane) is
//! omitted throughout: amplitudes, spectra, and reconstructions all use the
//! same basis, so any consistent phase convention yields identical
//! observables.

use num_complex::Complex64;

/// Azimuthal (`l`, signed) and radial (`p`, non-negative) mode numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex {
    pub l: i32,
    pub p: u32,
}

impl ModeIndex {
    pub fn new(l: i32, p: u32) -> Self {
        Self { l, p }
    }
}

/// Beam geometry; only the waist enters transverse mode shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub waist: f64,
}

impl Default for BeamGeometry {
    fn default() -> Self {
        Self { waist: 1.0 }
    }
}

/// Generalized Laguerre polynomial L_n^alpha(x) by the stable upward
/// three-term recurrence in n.
pub fn laguerre(n: u32, alpha: u32, x: f64) -> f64 {
    let a = alpha as f64;
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        // (k+1) L_{k+1} = (2k+1+a-x) L_k - (k+a) L_{k-1}
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// The positive constant making the mode unit-norm over the transverse plane.
///
/// Scales as 1/waist: the squared field integrates r dr dphi, two powers of
/// length, so the field itself carries waist^{-1}.
pub fn normalization(mode: ModeIndex, beam: &BeamGeometry) -> f64 {
    let l_abs = mode.l.unsigned_abs();
    // p! / (p + |l|)! as a running product; index ranges keep it well inside f64.
    let mut ratio = 1.0;
    for k in mode.p + 1..=mode.p + l_abs {
        ratio /= k as f64;
    }
    (2.0 * ratio / std::f64::consts::PI).sqrt() / beam.waist
}

/// Field value u_{lp}(r, phi).
///
/// u = k (sqrt2 r/w)^{|l|} e^{-r^2/w^2} L_p^{|l|}(2 r^2/w^2) e^{-i l phi}
pub fn mode_field(mode: ModeIndex, beam: &BeamGeometry, r: f64, phi: f64) -> Complex64 {
    let rho = r / beam.waist;
    let rho2 = rho * rho;
    let l_abs = mode.l.unsigned_abs();
    let radial = normalization(mode, beam)
        * (std::f64::consts::SQRT_2 * rho).powi(l_abs as i32)
        * (-rho2).exp()
        * laguerre(mode.p, l_abs, 2.0 * rho2);
    let phase = Complex64::from_polar(1.0, -(mode.l as f64) * phi);
    radial * phase
}

/// All mode indices with |l| <= l_max, p <= p_max, in lexicographic
/// (l ascending, then p ascending) order. This ordering is the row/column
/// order of every table and spectrum in the crate.
pub fn mode_set(l_max: u32, p_max: u32) -> Vec<ModeIndex> {
    let mut out = Vec::with_capacity(((2 * l_max + 1) * (p_max + 1)) as usize);
    for l in -(l_max as i32)..=l_max as i32 {
        for p in 0..=p_max {
            out.push(ModeIndex::new(l, p));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const W1: BeamGeometry = BeamGeometry { waist: 1.0 };

    #[test]
    fn laguerre_degree_zero_is_one() {
        assert_eq!(laguerre(0, 3, 7.2), 1.0);
    }

    #[test]
    fn laguerre_degree_one_linear() {
        assert_eq!(laguerre(1, 2, 1.0), 2.0);
    }

    #[test]
    fn laguerre_matches_closed_form_quadratic() {
        // L_2^0(x) = (x^2 - 4x + 2)/2
        let x = 2.0;
        assert!((laguerre(2, 0, x) - (x * x - 4.0 * x + 2.0) / 2.0).abs() < 1e-14);
        assert!((laguerre(2, 0, 2.0) - (-1.0)).abs() < 1e-14);
    }

    #[test]
    fn gaussian_normalization_closed_form() {
        let k = normalization(ModeIndex::new(0, 0), &W1);
        assert!((k - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn normalization_scales_inversely_with_waist() {
        for &(l, p) in &[(0, 0), (3, 2), (-10, 7)] {
            let m = ModeIndex::new(l, p);
            let k1 = normalization(m, &W1);
            let k2 = normalization(m, &BeamGeometry { waist: 2.0 });
            assert!((k2 - k1 / 2.0).abs() < 1e-15 * k1);
        }
    }

    #[test]
    fn field_vanishes_on_axis_for_nonzero_l() {
        for phi in [0.0, 1.3, -2.0] {
            assert_eq!(mode_field(ModeIndex::new(3, 0), &W1, 0.0, phi).norm(), 0.0);
        }
    }

    #[test]
    fn fundamental_is_real_positive() {
        for r in [0.0, 0.5, 1.7, 3.0] {
            for phi in [0.0, 1.0, -2.5] {
                let u = mode_field(ModeIndex::new(0, 0), &W1, r, phi);
                assert!(u.im == 0.0 && u.re > 0.0);
            }
        }
    }

    #[test]
    fn azimuthal_phase_winds_as_minus_l_phi() {
        let m = ModeIndex::new(4, 1);
        let r = 0.9;
        for phi in [0.3, 1.2, 2.9] {
            let d = mode_field(m, &W1, r, phi).arg() - mode_field(m, &W1, r, 0.0).arg();
            let expect = -(m.l as f64) * phi;
            let wrapped = (d - expect + std::f64::consts::PI)
                .rem_euclid(2.0 * std::f64::consts::PI)
                - std::f64::consts::PI;
            assert!(wrapped.abs() < 1e-12);
        }
    }

    #[test]
    fn opposite_l_conjugates_the_field() {
        for &(l, p) in &[(1, 0), (5, 3), (10, 7)] {
            for &(r, phi) in &[(0.4, 0.7), (1.3, -1.1), (2.2, 3.0)] {
                let u = mode_field(ModeIndex::new(l, p), &W1, r, phi);
                let v = mode_field(ModeIndex::new(-l, p), &W1, r, phi);
                assert!((u.conj() - v).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn radial_profile_has_p_zeros() {
        for p in 0..=7u32 {
            let m = ModeIndex::new(0, p);
            let mut crossings = 0;
            let mut last = mode_field(m, &W1, 1e-6, 0.0).re;
            for i in 1..6000 {
                let r = 6.0 * i as f64 / 6000.0;
                let v = mode_field(m, &W1, r, 0.0).re;
                if v.signum() != last.signum() {
                    crossings += 1;
                }
                last = v;
            }
            assert_eq!(crossings, p, "p={p}");
        }
    }

    #[test]
    fn mode_set_is_lexicographic_and_complete() {
        let set = mode_set(2, 1);
        assert_eq!(set.len(), 10);
        assert_eq!(set[0], ModeIndex::new(-2, 0));
        assert_eq!(set[1], ModeIndex::new(-2, 1));
        assert_eq!(set[9], ModeIndex::new(2, 1));
        let mut sorted = set.clone();
        sorted.sort();
        assert_eq!(set, sorted);
    }
}
