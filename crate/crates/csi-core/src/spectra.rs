//! Joint OAM coincidence spectra from an amplitude table and a pair source,
//! their marginals and mutual information, and conservation-diagonal
//! removal.
//!
//! The pair source emits OAM-anticorrelated photons (pump l = 0), so a
//! reference detection at (l_r, p_r) heralds the input mode (-l_r, p_r);
//! the spectrum entry is the source weight times |a^{l_o, -l_r}_{p_o, p_r}|².

use crate::amplitudes::AmplitudeTable;
use crate::error::{Error, Result};
use crate::modes::{mode_set, ModeIndex};

/// A spectrum whose off-diagonal mass falls below this fraction of the
/// total carries no information outside the conservation diagonal and is
/// treated as degenerate for diagonal removal.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Source weight profiles over the input signal modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceWeights {
    /// Equal weight on every configured mode.
    Flat,
    /// w(l, p) = gamma^(|l| + p), gamma in (0, 1].
    Geometric { gamma: f64 },
}

/// Down-conversion source: pump OAM 0, anticorrelated signal/reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdcSource {
    pub weights: SourceWeights,
}

impl SpdcSource {
    pub fn flat() -> Self {
        Self { weights: SourceWeights::Flat }
    }

    pub fn geometric(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("weight decay {gamma} must lie in (0, 1]")));
        }
        Ok(Self { weights: SourceWeights::Geometric { gamma } })
    }

    pub fn weight(&self, input: ModeIndex) -> f64 {
        match self.weights {
            SourceWeights::Flat => 1.0,
            SourceWeights::Geometric { gamma } => {
                gamma.powi(input.l.abs() + input.p as i32)
            }
        }
    }
}

/// Normalized probability tensor P(l_o, p_o; l_r, p_r), both sides over the
/// same (l, p) ranges, flattened row-major with the object index first.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectrum {
    l_max: u32,
    p_max: u32,
    probs: Vec<f64>,
    diagonal_zeroed: bool,
}

impl JointSpectrum {
    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn p_max(&self) -> u32 {
        self.p_max
    }

    pub fn n_modes(&self) -> usize {
        ((2 * self.l_max + 1) * (self.p_max + 1)) as usize
    }

    pub fn modes(&self) -> Vec<ModeIndex> {
        mode_set(self.l_max, self.p_max)
    }

    pub fn diagonal_zeroed(&self) -> bool {
        self.diagonal_zeroed
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    fn offset(&self, m: ModeIndex) -> Option<usize> {
        if m.l.unsigned_abs() > self.l_max || m.p > self.p_max {
            return None;
        }
        Some((m.l + self.l_max as i32) as usize * (self.p_max as usize + 1) + m.p as usize)
    }

    pub fn get(&self, object: ModeIndex, reference: ModeIndex) -> Option<f64> {
        Some(self.probs[self.offset(object)? * self.n_modes() + self.offset(reference)?])
    }

    /// Build directly from a probability tensor (normalized here).
    pub fn from_parts(l_max: u32, p_max: u32, probs: Vec<f64>) -> Result<Self> {
        let nm = ((2 * l_max + 1) * (p_max + 1)) as usize;
        if probs.len() != nm * nm {
            return Err(Error::InvalidConfig(format!(
                "spectrum for ranges ({l_max}, {p_max}) needs {} entries, got {}",
                nm * nm,
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidConfig("spectrum entries must be finite and >= 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateDistribution("spectrum has zero total mass".into()));
        }
        let probs = probs.iter().map(|p| p / total).collect();
        Ok(Self { l_max, p_max, probs, diagonal_zeroed: false })
    }

    /// CSV: `l_out,p_out,l_ref,p_ref,probability` rows in lexicographic order.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let modes = self.modes();
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!(
            "# l_max={} p_max={} diagonal_zeroed={}\n",
            self.l_max, self.p_max, self.diagonal_zeroed
        ));
        out.push_str("l_out,p_out,l_ref,p_ref,probability\n");
        for (o, mo) in modes.iter().enumerate() {
            for (r, mr) in modes.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{:.16e}\n",
                    mo.l,
                    mo.p,
                    mr.l,
                    mr.p,
                    self.probs[o * modes.len() + r]
                ));
            }
        }
        out
    }
}

/// The l-collapsed view Q(l_o, l_r) = sum over both p indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedSpectrum {
    pub l_max: u32,
    /// (2 l_max + 1)^2 entries, row-major in (l_o, l_r), l ascending.
    pub matrix: Vec<f64>,
}

impl CollapsedSpectrum {
    pub fn side(&self) -> usize {
        2 * self.l_max as usize + 1
    }

    pub fn get(&self, l_o: i32, l_r: i32) -> Option<f64> {
        let lm = self.l_max as i32;
        if l_o.abs() > lm || l_r.abs() > lm {
            return None;
        }
        Some(self.matrix[(l_o + lm) as usize * self.side() + (l_r + lm) as usize])
    }

    /// Entries above `floor` times the matrix maximum.
    pub fn support_count(&self, floor: f64) -> usize {
        let max = self.matrix.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            return 0;
        }
        self.matrix.iter().filter(|&&q| q > floor * max).count()
    }

    /// Dense matrix CSV with axis header rows (both p indices summed out).
    pub fn to_csv(&self, comments: &[String]) -> String {
        let lm = self.l_max as i32;
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str("# rows: l_out descending is not used; both axes ascend in l\n");
        let header: Vec<String> = (-lm..=lm).map(|l| l.to_string()).collect();
        out.push_str(&format!("l_out\\l_ref,{}\n", header.join(",")));
        for (row, l_o) in (-lm..=lm).enumerate() {
            let vals: Vec<String> = self.matrix[row * self.side()..(row + 1) * self.side()]
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect();
            out.push_str(&format!("{l_o},{}\n", vals.join(",")));
        }
        out
    }
}

/// Build the joint spectrum P(l_o, p_o; l_r, p_r) ∝ w(-l_r, p_r) ·
/// |a^{l_o, -l_r}_{p_o, p_r}|², normalized to total mass 1.
pub fn joint_spectrum(table: &AmplitudeTable, source: &SpdcSource) -> Result<JointSpectrum> {
    let modes = table.modes();
    let nm = modes.len();
    let mut probs = vec![0.0; nm * nm];
    for (r, mr) in modes.iter().enumerate() {
        let input = ModeIndex::new(-mr.l, mr.p);
        let w = source.weight(input);
        for (o, mo) in modes.iter().enumerate() {
            let a = table.get(*mo, input).expect("input mode within symmetric range");
            probs[o * nm + r] = w * a.norm_sqr();
        }
    }
    let total: f64 = probs.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateDistribution(
            "fully opaque object produced an all-zero spectrum".into(),
        ));
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(JointSpectrum { l_max: table.l_max(), p_max: table.p_max(), probs, diagonal_zeroed: false })
}

/// Fraction of total mass outside the conservation diagonal l_o = -l_r.
pub fn off_diagonal_mass_fraction(spec: &JointSpectrum) -> f64 {
    let modes = spec.modes();
    let nm = modes.len();
    let mut off = 0.0;
    let mut total = 0.0;
    for (o, mo) in modes.iter().enumerate() {
        for (r, mr) in modes.iter().enumerate() {
            let p = spec.probs[o * nm + r];
            total += p;
            if mo.l != -mr.l {
                off += p;
            }
        }
    }
    if total <= 0.0 {
        0.0
    } else {
        off / total
    }
}

/// Remove the conservation diagonal (entries with l_o = -l_r). With
/// `renormalize` the remainder is scaled back to total mass 1 — the default
/// for information figures; without it the raw zeroed tensor is returned
/// for sensitivity studies.
pub fn zero_diagonal(spec: &JointSpectrum, renormalize: bool) -> Result<JointSpectrum> {
    let off = off_diagonal_mass_fraction(spec);
    if off < DEGENERACY_FLOOR {
        return Err(Error::DegenerateDistribution(format!(
            "off-diagonal mass fraction {off:e} is below the {DEGENERACY_FLOOR:e} floor"
        )));
    }
    let modes = spec.modes();
    let nm = modes.len();
    let mut probs = spec.probs.clone();
    for (o, mo) in modes.iter().enumerate() {
        for (r, mr) in modes.iter().enumerate() {
            if mo.l == -mr.l {
                probs[o * nm + r] = 0.0;
            }
        }
    }
    if renormalize {
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
    }
    Ok(JointSpectrum { l_max: spec.l_max, p_max: spec.p_max, probs, diagonal_zeroed: true })
}

/// Marginal distributions at the object and reference detectors.
pub fn marginals(spec: &JointSpectrum) -> (Vec<f64>, Vec<f64>) {
    let nm = spec.n_modes();
    let mut p_obj = vec![0.0; nm];
    let mut p_ref = vec![0.0; nm];
    for o in 0..nm {
        for r in 0..nm {
            let p = spec.probs[o * nm + r];
            p_obj[o] += p;
            p_ref[r] += p;
        }
    }
    (p_obj, p_ref)
}

/// Mutual information in bits of the full 4-index distribution, with the
/// 0 log 0 = 0 convention.
pub fn mutual_information(spec: &JointSpectrum) -> f64 {
    let nm = spec.n_modes();
    let (p_obj, p_ref) = marginals(spec);
    let mut bits = 0.0;
    for o in 0..nm {
        for r in 0..nm {
            let p = spec.probs[o * nm + r];
            if p > 0.0 {
                bits += p * (p / (p_obj[o] * p_ref[r])).log2();
            }
        }
    }
    bits
}

/// Sum the two radial indices out of the full tensor.
pub fn collapsed(spec: &JointSpectrum) -> CollapsedSpectrum {
    let modes = spec.modes();
    let nm = modes.len();
    let lm = spec.l_max as i32;
    let side = 2 * spec.l_max as usize + 1;
    let mut matrix = vec![0.0; side * side];
    for (o, mo) in modes.iter().enumerate() {
        for (r, mr) in modes.iter().enumerate() {
            matrix[(mo.l + lm) as usize * side + (mr.l + lm) as usize] += spec.probs[o * nm + r];
        }
    }
    CollapsedSpectrum { l_max: spec.l_max, matrix }
}

/// Total-variation distance between two spectra over identical ranges.
pub fn total_variation(a: &JointSpectrum, b: &JointSpectrum) -> Result<f64> {
    if a.l_max != b.l_max || a.p_max != b.p_max {
        return Err(Error::InvalidConfig(format!(
            "spectra ranges differ: ({}, {}) vs ({}, {})",
            a.l_max, a.p_max, b.l_max, b.p_max
        )));
    }
    Ok(0.5 * a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).sum::<f64>())
}
