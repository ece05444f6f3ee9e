//! Scripted studies built from the lower-level pieces: a translation sweep
//! of the coincidence mutual information, a random-per-entry rotation trial,
//! a selection-rule audit, and a batch catalog writer.
//!
//! Artifact files carry their full configuration in `#` comment headers and
//! a manifest keyed by content hashes; nothing here embeds timestamps, so
//! repeated runs of the same configuration produce identical bytes.

use crate::amplitudes::{compute_table, compute_table_with_entry_poses, AmplitudeTable, QuadratureGrid};
use crate::error::{Error, Result};
use crate::imaging::{self, ReconstructedImage};
use crate::scene::TransmissionMap;
use crate::spectra::{self, JointSpectrum, SpdcSource};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

/// Protocol parameters for [`translation_sweep`].
#[derive(Debug, Clone)]
pub struct SweepParams {
    /// Number of displacement samples, starting at zero.
    pub steps: usize,
    /// Displacement increment along +x, in beam waists.
    pub step_size: f64,
    /// The object is scaled down by this factor before sweeping.
    pub shrink: f64,
    pub l_max: u32,
    pub p_max: u32,
    pub grid: QuadratureGrid,
    pub source: SpdcSource,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            steps: 13,
            step_size: 0.25,
            shrink: 4.0,
            l_max: 10,
            p_max: 3,
            grid: QuadratureGrid::default(),
            source: SpdcSource::flat(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub displacement: f64,
    pub mutual_information: f64,
    /// Mutual information after removing the conserved diagonal. Zero when
    /// the off-diagonal mass is degenerate; see `degenerate`.
    pub mutual_information_offdiag: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// CSV rows `displacement,mutual_information,mutual_information_offdiag,degenerate`.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str("displacement,mutual_information,mutual_information_offdiag,degenerate\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{}",
                p.displacement,
                p.mutual_information,
                p.mutual_information_offdiag,
                p.degenerate as u8
            );
        }
        out
    }
}

/// Slide a shrunken copy of the object along +x and record how much
/// coincidence information survives at each displacement.
///
/// The map's own translation is replaced point by point; its rotation is
/// kept and its scale is divided by `params.shrink`.
pub fn translation_sweep(map: &TransmissionMap, params: &SweepParams) -> Result<SweepResult> {
    if params.steps == 0 {
        return Err(Error::InvalidConfig("sweep needs at least one step".into()));
    }
    if !(params.shrink > 0.0) {
        return Err(Error::InvalidConfig(format!("shrink must be positive, got {}", params.shrink)));
    }
    if !(params.step_size >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "step size must be non-negative, got {}",
            params.step_size
        )));
    }
    let mut points = Vec::with_capacity(params.steps);
    for i in 0..params.steps {
        let d = i as f64 * params.step_size;
        let mut pose = *map.pose();
        pose.scale /= params.shrink;
        pose.translation = [d, 0.0];
        let moved = map.clone().with_pose(pose)?;
        let table = compute_table(&moved, params.l_max, params.p_max, &params.grid)?;
        let spectrum = spectra::joint_spectrum(&table, &params.source)?;
        let mi = spectra::mutual_information(&spectrum);
        let (mi_off, degenerate) = match spectra::zero_diagonal(&spectrum, true) {
            Ok(off) => (spectra::mutual_information(&off), false),
            Err(Error::DegenerateDistribution(_)) => (0.0, true),
            Err(e) => return Err(e),
        };
        points.push(SweepPoint {
            displacement: d,
            mutual_information: mi,
            mutual_information_offdiag: mi_off,
            degenerate,
        });
    }
    Ok(SweepResult { points })
}

/// Protocol parameters for [`rotation_trial`].
#[derive(Debug, Clone)]
pub struct RotationTrialParams {
    pub seed: u64,
    pub l_max: u32,
    pub p_max: u32,
    pub grid: QuadratureGrid,
    pub source: SpdcSource,
    pub recon_resolution: usize,
    pub recon_half_width: f64,
    /// Ring-sampling extent and density for the azimuthal-structure score.
    pub variance_radius: f64,
    pub rings: usize,
    pub angles: usize,
}

impl Default for RotationTrialParams {
    fn default() -> Self {
        RotationTrialParams {
            seed: 7,
            l_max: 10,
            p_max: 0,
            grid: QuadratureGrid::default(),
            source: SpdcSource::flat(),
            recon_resolution: 128,
            recon_half_width: 3.0,
            variance_radius: 2.4,
            rings: 24,
            angles: 256,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RotationTrialReport {
    /// Total-variation distance between the two joint spectra.
    pub total_variation: f64,
    /// Mean ring variance of |R| for the fixed-orientation reconstruction.
    pub fixed_variance: f64,
    /// Same score for the per-entry randomly rotated reconstruction.
    pub random_variance: f64,
    pub fixed_spectrum: JointSpectrum,
    pub random_spectrum: JointSpectrum,
    pub fixed_image: ReconstructedImage,
    pub random_image: ReconstructedImage,
}

/// Compare a fixed-orientation acquisition with one in which every table
/// entry is measured at its own uniformly random object orientation.
///
/// Entry angles are drawn from independent seeded streams (one stream per
/// entry index), so the result is reproducible and independent of thread
/// count.
pub fn rotation_trial(map: &TransmissionMap, params: &RotationTrialParams) -> Result<RotationTrialReport> {
    let seed = params.seed;
    let random_table = compute_table_with_entry_poses(
        map,
        params.l_max,
        params.p_max,
        &params.grid,
        move |entry| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(entry as u64);
            rng.gen_range(0.0..std::f64::consts::TAU)
        },
    )?;
    let fixed_table = compute_table(map, params.l_max, params.p_max, &params.grid)?;

    let random_spectrum = spectra::joint_spectrum(&random_table, &params.source)?;
    let fixed_spectrum = spectra::joint_spectrum(&fixed_table, &params.source)?;
    let total_variation = spectra::total_variation(&random_spectrum, &fixed_spectrum)?;

    let random_image = imaging::reconstruct(&random_table, params.recon_resolution, params.recon_half_width);
    let fixed_image = imaging::reconstruct(&fixed_table, params.recon_resolution, params.recon_half_width);
    let random_variance =
        imaging::azimuthal_variance(&random_image, params.variance_radius, params.rings, params.angles);
    let fixed_variance =
        imaging::azimuthal_variance(&fixed_image, params.variance_radius, params.rings, params.angles);

    Ok(RotationTrialReport {
        total_variation,
        fixed_variance,
        random_variance,
        fixed_spectrum,
        random_spectrum,
        fixed_image,
        random_image,
    })
}

/// Fraction of the off-diagonal |a|^2 mass that violates the N-fold
/// selection rule (l_out - l_in) mod N == 0.
///
/// Tables with essentially no off-diagonal structure at all (off-diagonal
/// mass below 1e-10 of the total) score zero rather than dividing noise by
/// noise.
pub fn symmetry_audit(table: &AmplitudeTable, n_fold: u32) -> Result<f64> {
    if n_fold == 0 {
        return Err(Error::InvalidConfig("fold count must be at least 1".into()));
    }
    let modes = table.modes();
    let nm = modes.len();
    let entries = table.entries();
    let mut total = 0.0;
    let mut off = 0.0;
    let mut leak = 0.0;
    for (o, out) in modes.iter().enumerate() {
        for (i, inp) in modes.iter().enumerate() {
            let m2 = entries[o * nm + i].norm_sqr();
            total += m2;
            if out.l != inp.l {
                off += m2;
                if (out.l - inp.l).rem_euclid(n_fold as i32) != 0 {
                    leak += m2;
                }
            }
        }
    }
    if total == 0.0 || off / total < 1e-10 {
        return Ok(0.0);
    }
    Ok(leak / off)
}

/// Catalog parameters: one full artifact bundle is written per shape.
#[derive(Debug, Clone)]
pub struct CatalogParams {
    pub l_max: u32,
    pub p_max: u32,
    pub grid: QuadratureGrid,
    pub source: SpdcSource,
    pub recon_resolution: usize,
    pub recon_half_width: f64,
    pub phase_p_out: u32,
    pub phase_p_in: u32,
    pub phase_floor: f64,
}

impl Default for CatalogParams {
    fn default() -> Self {
        CatalogParams {
            l_max: 10,
            p_max: 3,
            grid: QuadratureGrid::default(),
            source: SpdcSource::flat(),
            recon_resolution: 128,
            recon_half_width: 3.0,
            phase_p_out: 0,
            phase_p_in: 0,
            phase_floor: 0.01,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CatalogReport {
    /// Artifact file names actually written, in manifest order.
    pub written: Vec<String>,
    /// (shape name, failure message) for steps that could not complete.
    pub errors: Vec<(String, String)>,
}

fn catalog_config_text(names: &[&str], params: &CatalogParams) -> String {
    let weights = match params.source.weights {
        spectra::SourceWeights::Flat => "flat".to_string(),
        spectra::SourceWeights::Geometric { gamma } => format!("geometric:{gamma}"),
    };
    let mut cfg = String::new();
    let _ = writeln!(cfg, "grid_half_width={}", params.grid.half_width());
    let _ = writeln!(cfg, "grid_n={}", params.grid.resolution());
    let _ = writeln!(cfg, "l_max={}", params.l_max);
    let _ = writeln!(cfg, "p_max={}", params.p_max);
    let _ = writeln!(cfg, "phase_floor={}", params.phase_floor);
    let _ = writeln!(cfg, "phase_p_in={}", params.phase_p_in);
    let _ = writeln!(cfg, "phase_p_out={}", params.phase_p_out);
    let _ = writeln!(cfg, "recon_half_width={}", params.recon_half_width);
    let _ = writeln!(cfg, "recon_resolution={}", params.recon_resolution);
    let _ = writeln!(cfg, "shapes={}", names.join(";"));
    let _ = writeln!(cfg, "weights={weights}");
    cfg
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Write the full artifact bundle (table, spectra, reconstruction, phase
/// slice) for each centered shape, plus `config.txt` and a `manifest.csv`
/// of content hashes. A failing shape is recorded and skipped; the batch
/// continues.
pub fn centered_catalog(
    shapes: &[(String, TransmissionMap)],
    params: &CatalogParams,
    out_dir: &Path,
) -> Result<CatalogReport> {
    std::fs::create_dir_all(out_dir)?;
    let names: Vec<&str> = shapes.iter().map(|(n, _)| n.as_str()).collect();
    let config = catalog_config_text(&names, params);
    let config_sha = sha256_hex(config.as_bytes());
    std::fs::write(out_dir.join("config.txt"), &config)?;

    let mut report = CatalogReport::default();
    let mut manifest = String::from("artifact,config_sha256,content_sha256\n");
    let mut emit = |name: &str, bytes: &[u8], report: &mut CatalogReport| -> Result<()> {
        std::fs::write(out_dir.join(name), bytes)?;
        let _ = writeln!(manifest, "{name},{config_sha},{}", sha256_hex(bytes));
        report.written.push(name.to_string());
        Ok(())
    };

    for (name, map) in shapes {
        let header = vec![format!("shape={name}"), format!("config_sha256={config_sha}")];
        let run = (|| -> Result<Vec<(String, Vec<u8>)>> {
            let mut files = Vec::new();
            let table = compute_table(map, params.l_max, params.p_max, &params.grid)?;
            files.push((format!("{name}_table.csv"), table.to_csv(&header).into_bytes()));

            let spectrum = spectra::joint_spectrum(&table, &params.source)?;
            files.push((format!("{name}_spectrum.csv"), spectrum.to_csv(&header).into_bytes()));
            let off = spectra::zero_diagonal(&spectrum, true)?;
            files.push((format!("{name}_offdiag.csv"), off.to_csv(&header).into_bytes()));
            files.push((
                format!("{name}_collapsed.csv"),
                spectra::collapsed(&spectrum).to_csv(&header).into_bytes(),
            ));

            let image = imaging::reconstruct(&table, params.recon_resolution, params.recon_half_width);
            let pgm_comments: Vec<String> = header.clone();
            files.push((
                format!("{name}_recon.pgm"),
                crate::pgm::write_p5(&image.magnitude_pgm(65535), &pgm_comments),
            ));
            files.push((format!("{name}_recon.csv"), image.to_csv(&header).into_bytes()));

            let phase = imaging::phase_spectrum(&table, params.phase_p_out, params.phase_p_in, params.phase_floor)?;
            files.push((format!("{name}_phase.csv"), phase.to_csv(&header).into_bytes()));
            Ok(files)
        })();
        match run {
            Ok(files) => {
                for (fname, bytes) in files {
                    emit(&fname, &bytes, &mut report)?;
                }
            }
            Err(Error::Io(e)) => return Err(Error::Io(e)),
            Err(e) => report.errors.push((name.clone(), e.to_string())),
        }
    }

    std::fs::write(out_dir.join("manifest.csv"), &manifest)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Shape;
    use num_complex::Complex64;

    fn tiny_grid() -> QuadratureGrid {
        QuadratureGrid::new(6.0, 48).unwrap()
    }

    #[test]
    fn sweep_flags_conserving_objects_as_degenerate() {
        // full transparency conserves the mode index at every displacement
        let map = TransmissionMap::identity();
        let params = SweepParams {
            steps: 2,
            step_size: 0.5,
            shrink: 2.0,
            l_max: 2,
            p_max: 0,
            grid: tiny_grid(),
            source: SpdcSource::flat(),
        };
        let result = translation_sweep(&map, &params).unwrap();
        for p in &result.points {
            assert!(p.degenerate);
            assert_eq!(p.mutual_information_offdiag, 0.0);
            assert!(p.mutual_information > 0.0); // the diagonal itself is informative
        }
    }

    #[test]
    fn sweep_tracks_displacement() {
        let map = TransmissionMap::from_shape(Shape::Star {
            points: 5,
            r_outer: 0.9,
            r_inner: 0.45,
        })
        .unwrap();
        let params = SweepParams {
            steps: 3,
            step_size: 0.5,
            shrink: 2.0,
            l_max: 2,
            p_max: 0,
            grid: tiny_grid(),
            source: SpdcSource::flat(),
        };
        let result = translation_sweep(&map, &params).unwrap();
        assert_eq!(result.points.len(), 3);
        for (i, p) in result.points.iter().enumerate() {
            assert_eq!(p.displacement, i as f64 * 0.5);
            assert!(p.mutual_information.is_finite() && p.mutual_information >= -1e-12);
        }
        // a displaced object scatters across mode channels
        assert!(!result.points[2].degenerate);
        assert!(result.points[2].mutual_information_offdiag > 0.0);
        let csv = result.to_csv(&["case=test".into()]);
        assert!(csv.starts_with("# case=test\ndisplacement,"));
        assert_eq!(csv.lines().count(), 2 + 3);
    }

    #[test]
    fn sweep_rejects_bad_protocol() {
        let map = TransmissionMap::from_shape(Shape::Disc { radius: 1.0 }).unwrap();
        let bad = SweepParams { steps: 0, ..SweepParams::default() };
        assert!(translation_sweep(&map, &bad).is_err());
        let bad = SweepParams { shrink: 0.0, steps: 1, grid: tiny_grid(), l_max: 1, p_max: 0, ..SweepParams::default() };
        assert!(translation_sweep(&map, &bad).is_err());
    }

    #[test]
    fn audit_scores_hand_built_masses() {
        let l_max = 2u32;
        let nm = (2 * l_max as usize + 1) * 1;
        let mut entries = vec![Complex64::new(0.0, 0.0); nm * nm];
        let idx = |l: i32| (l + l_max as i32) as usize;
        entries[idx(0) * nm + idx(0)] = Complex64::new(1.0, 0.0); // diagonal
        entries[idx(2) * nm + idx(0)] = Complex64::new(1.0, 0.0); // step 2
        entries[idx(1) * nm + idx(0)] = Complex64::new(1.0, 0.0); // step 1
        let t = AmplitudeTable::from_parts(l_max, 0, QuadratureGrid::default(), entries).unwrap();
        // off-diagonal mass 2, of which the step-1 entry violates 2-fold
        assert_eq!(symmetry_audit(&t, 2).unwrap(), 0.5);
        // every off-diagonal step violates 5-fold
        assert_eq!(symmetry_audit(&t, 5).unwrap(), 1.0);
        assert!(symmetry_audit(&t, 0).is_err());
    }

    #[test]
    fn audit_treats_structureless_tables_as_clean() {
        let t = AmplitudeTable::kronecker(3, 1, QuadratureGrid::default());
        assert_eq!(symmetry_audit(&t, 3).unwrap(), 0.0);
    }

    #[test]
    fn rotation_trial_is_reproducible_and_bounded() {
        let map = TransmissionMap::from_shape(Shape::Fan {
            bands: 4,
            r_in: 0.25,
            r_out: 3.0,
            duty: 0.5,
        })
        .unwrap();
        let params = RotationTrialParams {
            l_max: 2,
            p_max: 0,
            grid: tiny_grid(),
            recon_resolution: 32,
            rings: 8,
            angles: 32,
            ..RotationTrialParams::default()
        };
        let a = rotation_trial(&map, &params).unwrap();
        let b = rotation_trial(&map, &params).unwrap();
        assert_eq!(a.random_spectrum.probs(), b.random_spectrum.probs());
        assert!((0.0..=1.0).contains(&a.total_variation));
        assert!(a.fixed_variance >= 0.0 && a.random_variance >= 0.0);
        // different seed, different angles, different spectrum
        let c = rotation_trial(&map, &RotationTrialParams { seed: 8, ..params }).unwrap();
        assert_ne!(a.random_spectrum.probs(), c.random_spectrum.probs());
    }

    #[test]
    fn catalog_is_deterministic_and_survives_bad_shapes() {
        let shapes = vec![
            (
                "slab".to_string(),
                TransmissionMap::from_shape(Shape::Rectangle { width: 1.4, height: 0.7 }).unwrap(),
            ),
            // fully transparent: the off-diagonal spectrum step must fail
            ("open".to_string(), TransmissionMap::identity()),
        ];
        let params = CatalogParams {
            l_max: 1,
            p_max: 0,
            grid: tiny_grid(),
            recon_resolution: 16,
            ..CatalogParams::default()
        };
        let base = std::env::temp_dir().join(format!("csi_catalog_test_{}", std::process::id()));
        let (dir_a, dir_b) = (base.join("a"), base.join("b"));
        let _ = std::fs::remove_dir_all(&base);

        let report = centered_catalog(&shapes, &params, &dir_a).unwrap();
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].0, "open");
        // the slab bundle is complete
        for suffix in ["table", "spectrum", "offdiag", "collapsed", "recon", "phase"] {
            assert!(report.written.iter().any(|w| w.starts_with("slab_") && w.contains(suffix)));
        }
        let manifest_a = std::fs::read(dir_a.join("manifest.csv")).unwrap();
        let config = std::fs::read(dir_a.join("config.txt")).unwrap();
        let first_row = String::from_utf8_lossy(&manifest_a).lines().nth(1).unwrap().to_string();
        assert!(first_row.contains(&sha256_hex(&config)));

        let report_b = centered_catalog(&shapes, &params, &dir_b).unwrap();
        assert_eq!(report.written, report_b.written);
        let manifest_b = std::fs::read(dir_b.join("manifest.csv")).unwrap();
        assert_eq!(manifest_a, manifest_b, "catalog output must be byte-stable");

        let _ = std::fs::remove_dir_all(&base);
    }
}
