//! Image reconstruction from the amplitude table and the phase spectrum of
//! a fixed radial-index slice.
//!
//! The reconstructed image is the position diagonal of the operator
//! expansion: R(x, y) = sum a^{l'l}_{p'p} u_{l'p'}(x, y) conj(u_{lp}(x, y)).

use crate::amplitudes::AmplitudeTable;
use crate::error::{Error, Result};
use crate::modes::{self, BeamGeometry, ModeIndex};
use crate::pgm;
use crate::scene::TransmissionMap;
use num_complex::Complex64;
use rayon::prelude::*;

/// Complex samples on a square raster; row-major, x fastest, y ascending
/// (row 0 is the bottom row).
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedImage {
    pub resolution: usize,
    pub half_width: f64,
    pub values: Vec<Complex64>,
}

impl ReconstructedImage {
    pub fn coord(&self, i: usize) -> f64 {
        let h = 2.0 * self.half_width / self.resolution as f64;
        -self.half_width + (i as f64 + 0.5) * h
    }

    /// Bilinear interpolation of |R| at a world point (clamped to the raster).
    pub fn magnitude_at(&self, x: f64, y: f64) -> f64 {
        let n = self.resolution;
        let h = 2.0 * self.half_width / n as f64;
        let fx = ((x + self.half_width) / h - 0.5).clamp(0.0, (n - 1) as f64);
        let fy = ((y + self.half_width) / h - 0.5).clamp(0.0, (n - 1) as f64);
        let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(n - 1), (y0 + 1).min(n - 1));
        let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
        let v = |ix: usize, iy: usize| self.values[iy * n + ix].norm();
        v(x0, y0) * (1.0 - tx) * (1.0 - ty)
            + v(x1, y0) * tx * (1.0 - ty)
            + v(x0, y1) * (1.0 - tx) * ty
            + v(x1, y1) * tx * ty
    }

    /// Magnitude image as a PGM, |R| affinely scaled to [0, maxval], top row
    /// at +y.
    pub fn magnitude_pgm(&self, maxval: u16) -> pgm::Pgm {
        let n = self.resolution;
        let mags: Vec<f64> = self.values.iter().map(|v| v.norm()).collect();
        let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = mags.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut samples = Vec::with_capacity(n * n);
        for row in 0..n {
            let src = n - 1 - row;
            for col in 0..n {
                let s = (mags[src * n + col] - lo) / span;
                samples.push((s * maxval as f64).round() as u16);
            }
        }
        pgm::Pgm { width: n, height: n, maxval, samples }
    }

    /// Raw complex samples as CSV rows `x,y,re,im`.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!(
            "# resolution={} half_width={}\n",
            self.resolution, self.half_width
        ));
        out.push_str("x,y,re,im\n");
        for iy in 0..self.resolution {
            for ix in 0..self.resolution {
                let v = self.values[iy * self.resolution + ix];
                out.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    self.coord(ix),
                    self.coord(iy),
                    v.re,
                    v.im
                ));
            }
        }
        out
    }
}

/// Evaluate the operator-expansion diagonal on a raster. Pixels are
/// independent; the per-pixel mode sums run in a fixed order.
pub fn reconstruct(
    table: &AmplitudeTable,
    resolution: usize,
    half_width: f64,
) -> ReconstructedImage {
    let mode_list = table.modes();
    let nm = mode_list.len();
    let beam = BeamGeometry::default();
    let entries = table.entries();
    let h = 2.0 * half_width / resolution as f64;

    let mut values = vec![Complex64::new(0.0, 0.0); resolution * resolution];
    values.par_iter_mut().enumerate().for_each(|(k, slot)| {
        let x = -half_width + ((k % resolution) as f64 + 0.5) * h;
        let y = -half_width + ((k / resolution) as f64 + 0.5) * h;
        let r = (x * x + y * y).sqrt();
        let phi = y.atan2(x);
        let v: Vec<Complex64> = mode_list
            .iter()
            .map(|&m| modes::mode_field(m, &beam, r, phi))
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for o in 0..nm {
            let mut inner = Complex64::new(0.0, 0.0);
            let row = &entries[o * nm..(o + 1) * nm];
            for i in 0..nm {
                inner += row[i] * v[i].conj();
            }
            acc += v[o] * inner;
        }
        *slot = acc;
    });
    ReconstructedImage { resolution, half_width, values }
}

/// Reconstruction fidelity against a transmission map inside a disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageErrorReport {
    /// Root-mean-square difference of the [0, 1]-rescaled magnitude vs T.
    pub rmse: f64,
    /// Pearson correlation of the same pair.
    pub correlation: f64,
}

/// Compare |R| (affinely rescaled to [0, 1] over the region) with T sampled
/// at the same pixels, over r < region_radius.
pub fn image_error(
    image: &ReconstructedImage,
    truth: &TransmissionMap,
    region_radius: f64,
) -> Result<ImageErrorReport> {
    let n = image.resolution;
    let mut mags = Vec::new();
    let mut ts = Vec::new();
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = (image.coord(ix), image.coord(iy));
            if x * x + y * y < region_radius * region_radius {
                mags.push(image.values[iy * n + ix].norm());
                ts.push(truth.sample(x, y));
            }
        }
    }
    if mags.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "region radius {region_radius} contains no pixels"
        )));
    }
    let lo = mags.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = mags.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::CorrelationUndefined(
            "reconstruction is constant over the region".into(),
        ));
    }
    let rescaled: Vec<f64> = mags.iter().map(|m| (m - lo) / (hi - lo)).collect();
    let count = rescaled.len() as f64;
    let mean_r = rescaled.iter().sum::<f64>() / count;
    let mean_t = ts.iter().sum::<f64>() / count;
    let mut cov = 0.0;
    let mut var_r = 0.0;
    let mut var_t = 0.0;
    let mut sq = 0.0;
    for (r, t) in rescaled.iter().zip(&ts) {
        let (dr, dt) = (r - mean_r, t - mean_t);
        cov += dr * dt;
        var_r += dr * dr;
        var_t += dt * dt;
        sq += (r - t) * (r - t);
    }
    if var_t == 0.0 {
        return Err(Error::CorrelationUndefined("truth is constant over the region".into()));
    }
    Ok(ImageErrorReport {
        rmse: (sq / count).sqrt(),
        correlation: cov / (var_r.sqrt() * var_t.sqrt()),
    })
}

/// Phases of one (p_out, p_in) slice of the table over (l_out, l_in);
/// entries with |a| under the floor are NaN, not fabricated.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpectrum {
    pub l_max: u32,
    pub p_out: u32,
    pub p_in: u32,
    /// Absolute magnitude threshold actually applied.
    pub floor: f64,
    /// Fraction of the slice's |a|^2 mass carried by sub-floor entries.
    pub below_floor_mass: f64,
    /// (2 l_max + 1)^2 phases row-major in (l_out, l_in); NaN = undefined.
    pub phases: Vec<f64>,
}

impl PhaseSpectrum {
    pub fn side(&self) -> usize {
        2 * self.l_max as usize + 1
    }

    pub fn get(&self, l_out: i32, l_in: i32) -> Option<f64> {
        let lm = self.l_max as i32;
        if l_out.abs() > lm || l_in.abs() > lm {
            return None;
        }
        Some(self.phases[(l_out + lm) as usize * self.side() + (l_in + lm) as usize])
    }

    /// CSV rows `l_out,l_in,phase` with a literal `nan` sentinel.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let lm = self.l_max as i32;
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!(
            "# p_out={} p_in={} floor={:.16e} below_floor_mass={:.16e}\n",
            self.p_out, self.p_in, self.floor, self.below_floor_mass
        ));
        out.push_str("l_out,l_in,phase\n");
        for l_out in -lm..=lm {
            for l_in in -lm..=lm {
                let v = self.get(l_out, l_in).unwrap();
                if v.is_nan() {
                    out.push_str(&format!("{l_out},{l_in},nan\n"));
                } else {
                    out.push_str(&format!("{l_out},{l_in},{v:.16e}\n"));
                }
            }
        }
        out
    }
}

/// Extract arg(a^{l_out, l_in}) at fixed (p_out, p_in), masking entries with
/// |a| below `floor_frac` times the slice maximum.
pub fn phase_spectrum(
    table: &AmplitudeTable,
    p_out: u32,
    p_in: u32,
    floor_frac: f64,
) -> Result<PhaseSpectrum> {
    if p_out > table.p_max() || p_in > table.p_max() {
        return Err(Error::InvalidConfig(format!(
            "slice ({p_out}, {p_in}) outside table p range 0..={}",
            table.p_max()
        )));
    }
    let lm = table.l_max() as i32;
    let side = (2 * lm + 1) as usize;
    let mut slice = Vec::with_capacity(side * side);
    for l_out in -lm..=lm {
        for l_in in -lm..=lm {
            slice.push(
                table
                    .get(ModeIndex::new(l_out, p_out), ModeIndex::new(l_in, p_in))
                    .expect("slice indices in range"),
            );
        }
    }
    let max_mag = slice.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let floor = floor_frac * max_mag;
    let mut phases = Vec::with_capacity(side * side);
    let mut below = 0.0;
    let mut total = 0.0;
    let mut defined = 0usize;
    for a in &slice {
        let mag2 = a.norm_sqr();
        total += mag2;
        if a.norm() >= floor && max_mag > 0.0 {
            phases.push(a.arg());
            defined += 1;
        } else {
            phases.push(f64::NAN);
            below += mag2;
        }
    }
    if defined == 0 {
        return Err(Error::DegenerateDistribution(
            "every slice entry lies below the phase floor".into(),
        ));
    }
    Ok(PhaseSpectrum {
        l_max: table.l_max(),
        p_out,
        p_in,
        floor,
        below_floor_mass: if total > 0.0 { below / total } else { 0.0 },
        phases,
    })
}

/// Mean over rings of the variance of |R| around each ring: a measure of
/// azimuthal structure. Rings are centered on the beam axis.
pub fn azimuthal_variance(image: &ReconstructedImage, r_max: f64, rings: usize, angles: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..rings {
        let r = (j as f64 + 0.5) * r_max / rings as f64;
        let mut vals = Vec::with_capacity(angles);
        for k in 0..angles {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / angles as f64;
            vals.push(image.magnitude_at(r * phi.cos(), r * phi.sin()));
        }
        let mean = vals.iter().sum::<f64>() / angles as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / angles as f64;
        acc += var;
    }
    acc / rings as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitudes::{compute_table, AmplitudeTable, QuadratureGrid};
    use crate::scene::{Shape, TransmissionMap};

    fn small_table(fill: impl Fn(usize) -> Complex64) -> AmplitudeTable {
        let nm = 3 * 2; // l_max=1, p_max=1
        let entries: Vec<Complex64> = (0..nm * nm).map(fill).collect();
        AmplitudeTable::from_parts(1, 1, QuadratureGrid::default(), entries).unwrap()
    }

    #[test]
    fn zero_table_reconstructs_to_zero() {
        let t = small_table(|_| Complex64::new(0.0, 0.0));
        let img = reconstruct(&t, 8, 3.0);
        assert!(img.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn kronecker_table_reconstructs_mode_intensity_sum() {
        let t = AmplitudeTable::kronecker(1, 1, QuadratureGrid::default());
        let img = reconstruct(&t, 16, 3.0);
        let beam = BeamGeometry::default();
        for iy in 0..16 {
            for ix in 0..16 {
                let (x, y) = (img.coord(ix), img.coord(iy));
                let r = (x * x + y * y).sqrt();
                let phi = y.atan2(x);
                let want: f64 = t
                    .modes()
                    .iter()
                    .map(|&m| modes::mode_field(m, &beam, r, phi).norm_sqr())
                    .sum();
                let got = img.values[iy * 16 + ix];
                assert!((got.re - want).abs() < 1e-12);
                assert!(got.im.abs() < 1e-14);
                assert!(got.re >= 0.0);
            }
        }
    }

    #[test]
    fn reconstruction_is_linear_in_the_table() {
        let t1 = small_table(|k| Complex64::new((k % 5) as f64 * 0.1, (k % 3) as f64 * 0.2));
        let t2 = small_table(|k| Complex64::new(0.05 * (k % 7) as f64, -0.1 * (k % 2) as f64));
        let sum = AmplitudeTable::from_parts(
            1,
            1,
            QuadratureGrid::default(),
            t1.entries().iter().zip(t2.entries()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let (i1, i2, isum) = (reconstruct(&t1, 12, 2.5), reconstruct(&t2, 12, 2.5), reconstruct(&sum, 12, 2.5));
        for k in 0..i1.values.len() {
            assert!((i1.values[k] + i2.values[k] - isum.values[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn real_object_reconstructs_to_real_image() {
        let g = QuadratureGrid::new(6.0, 64).unwrap();
        let m = TransmissionMap::from_shape(Shape::Disc { radius: 1.0 }).unwrap();
        let t = compute_table(&m, 2, 1, &g).unwrap();
        let img = reconstruct(&t, 24, 3.0);
        let max = img.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for v in &img.values {
            assert!(v.im.abs() < 1e-9 * max);
        }
    }

    #[test]
    fn truth_against_itself_correlates_perfectly() {
        let m = TransmissionMap::from_shape(Shape::Disc { radius: 0.8 }).unwrap();
        let n = 32;
        let hw = 2.0;
        let h = 2.0 * hw / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                let x = -hw + (ix as f64 + 0.5) * h;
                let y = -hw + (iy as f64 + 0.5) * h;
                values.push(Complex64::new(m.sample(x, y), 0.0));
            }
        }
        let img = ReconstructedImage { resolution: n, half_width: hw, values };
        let rep = image_error(&img, &m, 1.5).unwrap();
        assert!((rep.correlation - 1.0).abs() < 1e-12);
        assert!(rep.rmse < 1e-12);
    }

    #[test]
    fn constant_image_has_undefined_correlation() {
        let img = ReconstructedImage {
            resolution: 8,
            half_width: 2.0,
            values: vec![Complex64::new(0.0, 0.0); 64],
        };
        let m = TransmissionMap::from_shape(Shape::Disc { radius: 1.0 }).unwrap();
        assert!(matches!(
            image_error(&img, &m, 1.5),
            Err(Error::CorrelationUndefined(_))
        ));
    }

    #[test]
    fn mirror_symmetric_object_has_binary_phase_slice() {
        let g = QuadratureGrid::new(6.0, 128).unwrap();
        let m = TransmissionMap::from_shape(Shape::Star {
            points: 5,
            r_outer: 0.45,
            r_inner: 0.225,
        })
        .unwrap();
        let t = compute_table(&m, 3, 0, &g).unwrap();
        let ps = phase_spectrum(&t, 0, 0, 0.01).unwrap();
        for &phase in &ps.phases {
            if !phase.is_nan() {
                let dist_to_axis = phase.abs().min((phase.abs() - std::f64::consts::PI).abs());
                assert!(dist_to_axis < 1e-6, "phase {phase} not in {{0, pi}}");
            }
        }
    }

    #[test]
    fn impossible_floor_is_an_error() {
        let t = AmplitudeTable::kronecker(1, 0, QuadratureGrid::default());
        assert!(matches!(
            phase_spectrum(&t, 0, 0, 2.0),
            Err(Error::DegenerateDistribution(_))
        ));
        assert!(phase_spectrum(&t, 1, 0, 0.01).is_err()); // slice outside range
    }

    #[test]
    fn azimuthal_variance_detects_angular_structure() {
        let n = 64;
        let hw = 3.0;
        let h = 2.0 * hw / n as f64;
        let mk = |f: &dyn Fn(f64, f64) -> f64| {
            let mut values = Vec::with_capacity(n * n);
            for iy in 0..n {
                for ix in 0..n {
                    let x = -hw + (ix as f64 + 0.5) * h;
                    let y = -hw + (iy as f64 + 0.5) * h;
                    values.push(Complex64::new(f(x, y), 0.0));
                }
            }
            ReconstructedImage { resolution: n, half_width: hw, values }
        };
        let radial = mk(&|x, y| (-(x * x + y * y)).exp());
        let angular = mk(&|x: f64, y: f64| (3.0 * y.atan2(x)).cos().abs());
        let v_r = azimuthal_variance(&radial, 2.0, 16, 64);
        let v_a = azimuthal_variance(&angular, 2.0, 16, 64);
        assert!(v_a > 10.0 * v_r, "angular {v_a} radial {v_r}");
    }

    #[test]
    fn pgm_export_puts_top_row_first() {
        // bright spot at +y must land in row 0 of the PGM
        let n = 4;
        let mut values = vec![Complex64::new(0.0, 0.0); n * n];
        values[(n - 1) * n + 2] = Complex64::new(5.0, 0.0); // y-max row, col 2
        let img = ReconstructedImage { resolution: n, half_width: 1.0, values };
        let p = img.magnitude_pgm(255);
        assert_eq!(p.samples[2], 255);
        assert_eq!(p.samples.iter().filter(|&&s| s == 255).count(), 1);
    }
}
