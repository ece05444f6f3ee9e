//! Transition amplitudes a^{l'l}_{p'p} = <l',p'| T |l,p> by deterministic
//! Cartesian midpoint quadrature.
//!
//! A table entry depends on its two radial profiles and on the azimuthal
//! difference m = |l' - l| only, so the table is computed per radial pair:
//! one shared product vector, then one cos- and one sin-weighted reduction
//! per m. Every reduction runs pairwise over the nodes in row-major order,
//! so results are bit-reproducible regardless of how many workers run.

use crate::error::{Error, Result};
use crate::modes::{self, BeamGeometry, ModeIndex};
use crate::scene::TransmissionMap;
use num_complex::Complex64;
use rayon::prelude::*;

/// Midpoint-rule grid: n x n cell centers tiling [-L, L]^2, uniform weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    half_width: f64,
    n: usize,
}

pub const DEFAULT_HALF_WIDTH: f64 = 6.0;
pub const DEFAULT_RESOLUTION: usize = 512;

/// compute_table refuses tables above this entry count.
pub const TABLE_ENTRY_BUDGET: usize = 1 << 24;

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self { half_width: DEFAULT_HALF_WIDTH, n: DEFAULT_RESOLUTION }
    }
}

impl QuadratureGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid half-width {half_width} must be positive"
            )));
        }
        if n < 16 {
            return Err(Error::InvalidConfig(format!("grid resolution {n} is below 16")));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n
    }

    /// Cell side, also the node spacing.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    /// The uniform quadrature weight (cell area).
    pub fn weight(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Coordinate of the i-th node center along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    /// Node position for flat index k; x varies fastest (row-major in y).
    pub fn node(&self, k: usize) -> (f64, f64) {
        (self.coord(k % self.n), self.coord(k / self.n))
    }
}

/// Deterministic pairwise (cascade) summation of f(k) for k in [lo, hi).
pub fn pairwise_sum<F>(f: &F, lo: usize, hi: usize) -> Complex64
where
    F: Fn(usize) -> Complex64,
{
    const BASE: usize = 64;
    if hi - lo <= BASE {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in lo..hi {
            acc += f(k);
        }
        acc
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_sum(f, lo, mid) + pairwise_sum(f, mid, hi)
    }
}

/// Deterministic pairwise dot product of two slices over [lo, hi).
fn pairwise_dot(a: &[f64], b: &[f64], lo: usize, hi: usize) -> f64 {
    const BASE: usize = 64;
    if hi - lo <= BASE {
        let mut acc = 0.0;
        for k in lo..hi {
            acc += a[k] * b[k];
        }
        acc
    } else {
        let mid = lo + (hi - lo) / 2;
        pairwise_dot(a, b, lo, mid) + pairwise_dot(a, b, mid, hi)
    }
}

/// Per-node mode data shared by every entry of a table: radial profiles per
/// (|l|, p) and cos/sin of m*phi per azimuthal difference m.
struct NodeTables {
    radial_key: Vec<(u32, u32)>,
    radial: Vec<Vec<f64>>,
    trig_m: Vec<u32>,
    cos_m: Vec<Vec<f64>>,
    sin_m: Vec<Vec<f64>>,
}

impl NodeTables {
    fn build(grid: &QuadratureGrid, modes: &[ModeIndex], diffs: &[u32]) -> Self {
        let nn = grid.node_count();
        let beam = BeamGeometry::default();

        let mut r = vec![0.0; nn];
        let mut exp_r2 = vec![0.0; nn];
        let mut phi = vec![0.0; nn];
        for k in 0..nn {
            let (x, y) = grid.node(k);
            let r2 = x * x + y * y;
            r[k] = r2.sqrt();
            exp_r2[k] = (-r2).exp();
            phi[k] = y.atan2(x);
        }

        let mut radial_key: Vec<(u32, u32)> = modes
            .iter()
            .map(|m| (m.l.unsigned_abs(), m.p))
            .collect();
        radial_key.sort_unstable();
        radial_key.dedup();
        let radial = radial_key
            .iter()
            .map(|&(l_abs, p)| {
                let norm = modes::normalization(ModeIndex::new(l_abs as i32, p), &beam);
                let mut out = vec![0.0; nn];
                for k in 0..nn {
                    let sr = std::f64::consts::SQRT_2 * r[k];
                    out[k] = norm
                        * sr.powi(l_abs as i32)
                        * exp_r2[k]
                        * modes::laguerre(p, l_abs, 2.0 * r[k] * r[k]);
                }
                out
            })
            .collect();

        let mut trig_m = diffs.to_vec();
        trig_m.sort_unstable();
        trig_m.dedup();
        let mut cos_m = Vec::with_capacity(trig_m.len());
        let mut sin_m = Vec::with_capacity(trig_m.len());
        for &m in &trig_m {
            let mut c = vec![0.0; nn];
            let mut s = vec![0.0; nn];
            for k in 0..nn {
                let (sv, cv) = (m as f64 * phi[k]).sin_cos();
                c[k] = cv;
                s[k] = sv;
            }
            cos_m.push(c);
            sin_m.push(s);
        }
        NodeTables { radial_key, radial, trig_m, cos_m, sin_m }
    }

    fn key_index(&self, m: ModeIndex) -> usize {
        let key = (m.l.unsigned_abs(), m.p);
        self.radial_key.binary_search(&key).expect("mode outside built tables")
    }

    fn radial_for(&self, m: ModeIndex) -> &[f64] {
        &self.radial[self.key_index(m)]
    }

    fn trig_for(&self, m: u32) -> (&[f64], &[f64]) {
        let i = self.trig_m.binary_search(&m).expect("difference outside built tables");
        (&self.cos_m[i], &self.sin_m[i])
    }
}

/// T(node) * weight for every grid node, row-major.
fn node_weights(map: &TransmissionMap, grid: &QuadratureGrid) -> Vec<f64> {
    let w = grid.weight();
    (0..grid.node_count())
        .map(|k| {
            let (x, y) = grid.node(k);
            map.sample(x, y) * w
        })
        .collect()
}

/// Product vector R_out * R_in * T * weight for one radial pair; float
/// multiplication commutes bitwise, so the operand order of the radials
/// does not matter.
fn product_vector(ro: &[f64], ri: &[f64], tw: &[f64]) -> Vec<f64> {
    (0..tw.len()).map(|k| ro[k] * ri[k] * tw[k]).collect()
}

/// Assemble one amplitude from its pair reductions: a = C + i sign(d) S
/// with d = l_out - l_in.
fn assemble(c: f64, s: f64, d: i32) -> Complex64 {
    let sgn = if d >= 0 { 1.0 } else { -1.0 };
    Complex64::new(c, sgn * s)
}

/// One quadrature entry over prebuilt node tables.
fn entry_sum(tables: &NodeTables, tw: &[f64], out: ModeIndex, inp: ModeIndex) -> Complex64 {
    let p = product_vector(tables.radial_for(out), tables.radial_for(inp), tw);
    let d = out.l - inp.l;
    let (cos_d, sin_d) = tables.trig_for(d.unsigned_abs());
    assemble(
        pairwise_dot(&p, cos_d, 0, p.len()),
        pairwise_dot(&p, sin_d, 0, p.len()),
        d,
    )
}

/// Quadrature estimate of a single transition amplitude <out| T |in>.
/// Bitwise-identical to the corresponding [`compute_table`] entry.
pub fn compute_amplitude(
    map: &TransmissionMap,
    out: ModeIndex,
    inp: ModeIndex,
    grid: &QuadratureGrid,
) -> Complex64 {
    let tables = NodeTables::build(grid, &[out, inp], &[(out.l - inp.l).unsigned_abs()]);
    let tw = node_weights(map, grid);
    entry_sum(&tables, &tw, out, inp)
}

/// Dense table of transition amplitudes over |l| <= l_max, p <= p_max on
/// both sides, row/column order lexicographic in (l, p).
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTable {
    l_max: u32,
    p_max: u32,
    grid: QuadratureGrid,
    entries: Vec<Complex64>,
}

impl AmplitudeTable {
    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn p_max(&self) -> u32 {
        self.p_max
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn n_modes(&self) -> usize {
        ((2 * self.l_max + 1) * (self.p_max + 1)) as usize
    }

    pub fn modes(&self) -> Vec<ModeIndex> {
        modes::mode_set(self.l_max, self.p_max)
    }

    /// Flat position of a mode in the lexicographic ordering.
    pub fn mode_offset(&self, m: ModeIndex) -> Option<usize> {
        if m.l.unsigned_abs() > self.l_max || m.p > self.p_max {
            return None;
        }
        let row = (m.l + self.l_max as i32) as usize;
        Some(row * (self.p_max as usize + 1) + m.p as usize)
    }

    pub fn get(&self, out: ModeIndex, inp: ModeIndex) -> Option<Complex64> {
        let o = self.mode_offset(out)?;
        let i = self.mode_offset(inp)?;
        Some(self.entries[o * self.n_modes() + i])
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn from_parts(
        l_max: u32,
        p_max: u32,
        grid: QuadratureGrid,
        entries: Vec<Complex64>,
    ) -> Result<Self> {
        let nm = ((2 * l_max + 1) * (p_max + 1)) as usize;
        if entries.len() != nm * nm {
            return Err(Error::InvalidConfig(format!(
                "table for ranges ({l_max}, {p_max}) needs {} entries, got {}",
                nm * nm,
                entries.len()
            )));
        }
        Ok(Self { l_max, p_max, grid, entries })
    }

    /// The exact Kronecker table (identity object in the continuum limit).
    pub fn kronecker(l_max: u32, p_max: u32, grid: QuadratureGrid) -> Self {
        let nm = ((2 * l_max + 1) * (p_max + 1)) as usize;
        let mut entries = vec![Complex64::new(0.0, 0.0); nm * nm];
        for i in 0..nm {
            entries[i * nm + i] = Complex64::new(1.0, 0.0);
        }
        Self { l_max, p_max, grid, entries }
    }

    /// CSV serialization: `#` comment lines, a column header, then one row
    /// per entry in lexicographic (l_out, p_out, l_in, p_in) order with
    /// 17-significant-digit floats.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let modes = self.modes();
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str(&format!(
            "# l_max={} p_max={} grid_half_width={} grid_n={}\n",
            self.l_max,
            self.p_max,
            self.grid.half_width(),
            self.grid.resolution()
        ));
        out.push_str("l_out,p_out,l_in,p_in,re,im\n");
        for (o, mo) in modes.iter().enumerate() {
            for (i, mi) in modes.iter().enumerate() {
                let a = self.entries[o * modes.len() + i];
                out.push_str(&format!(
                    "{},{},{},{},{:.16e},{:.16e}\n",
                    mo.l, mo.p, mi.l, mi.p, a.re, a.im
                ));
            }
        }
        out
    }

    /// Parse the serialization produced by [`to_csv`](Self::to_csv). The
    /// grid descriptor is recovered from the embedded metadata line.
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidConfig(msg);
        let mut l_max = None;
        let mut p_max = None;
        let mut half_width = None;
        let mut n = None;
        let mut rows: Vec<(i32, u32, i32, u32, Complex64)> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for token in comment.split_whitespace() {
                    if let Some((k, v)) = token.split_once('=') {
                        match k {
                            "l_max" => l_max = v.parse().ok(),
                            "p_max" => p_max = v.parse().ok(),
                            "grid_half_width" => half_width = v.parse().ok(),
                            "grid_n" => n = v.parse().ok(),
                            _ => {}
                        }
                    }
                }
                continue;
            }
            if line.starts_with("l_out") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(format!("table row needs 6 fields: `{line}`")));
            }
            let parse_i = |s: &str| s.parse::<i32>().map_err(|_| bad(format!("bad int `{s}`")));
            let parse_u = |s: &str| s.parse::<u32>().map_err(|_| bad(format!("bad int `{s}`")));
            let parse_f = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad float `{s}`")));
            rows.push((
                parse_i(f[0])?,
                parse_u(f[1])?,
                parse_i(f[2])?,
                parse_u(f[3])?,
                Complex64::new(parse_f(f[4])?, parse_f(f[5])?),
            ));
        }
        let (l_max, p_max) = match (l_max, p_max) {
            (Some(l), Some(p)) => (l, p),
            _ => return Err(bad("missing l_max/p_max metadata".into())),
        };
        let grid = QuadratureGrid::new(
            half_width.ok_or_else(|| bad("missing grid_half_width metadata".into()))?,
            n.ok_or_else(|| bad("missing grid_n metadata".into()))?,
        )?;
        let nm = ((2 * l_max + 1) * (p_max + 1)) as usize;
        if rows.len() != nm * nm {
            return Err(bad(format!("expected {} rows, got {}", nm * nm, rows.len())));
        }
        let mut table = Self {
            l_max,
            p_max,
            grid,
            entries: vec![Complex64::new(0.0, 0.0); nm * nm],
        };
        for (lo, po, li, pi, a) in rows {
            let o = table
                .mode_offset(ModeIndex::new(lo, po))
                .ok_or_else(|| bad(format!("mode ({lo},{po}) outside declared range")))?;
            let i = table
                .mode_offset(ModeIndex::new(li, pi))
                .ok_or_else(|| bad(format!("mode ({li},{pi}) outside declared range")))?;
            table.entries[o * nm + i] = a;
        }
        Ok(table)
    }
}

/// Compute the full amplitude table for a map.
///
/// Work is factored over unordered radial-key pairs: each pair shares one
/// product vector and contributes the (at most two) azimuthal differences
/// its sign combinations can realize. Pairs run in parallel; each
/// reduction's order is fixed, so the result does not depend on the worker
/// count, and entries agree bitwise with [`compute_amplitude`].
pub fn compute_table(
    map: &TransmissionMap,
    l_max: u32,
    p_max: u32,
    grid: &QuadratureGrid,
) -> Result<AmplitudeTable> {
    let nm = ((2 * l_max + 1) * (p_max + 1)) as usize;
    let total = nm * nm;
    if total > TABLE_ENTRY_BUDGET {
        return Err(Error::ResourceLimit(format!(
            "table of {total} entries exceeds the {TABLE_ENTRY_BUDGET}-entry budget"
        )));
    }
    let mode_list = modes::mode_set(l_max, p_max);
    let diffs: Vec<u32> = (0..=2 * l_max).collect();
    let tables = NodeTables::build(grid, &mode_list, &diffs);
    let tw = node_weights(map, grid);
    let nn = tw.len();

    let n_keys = tables.radial_key.len();
    let mut pairs = Vec::with_capacity(n_keys * (n_keys + 1) / 2);
    for ki in 0..n_keys {
        for kj in ki..n_keys {
            pairs.push((ki, kj));
        }
    }
    // (c, s) reductions per pair and azimuthal difference
    let reductions: Vec<Vec<(u32, f64, f64)>> = pairs
        .par_iter()
        .map(|&(ki, kj)| {
            let p = product_vector(&tables.radial[ki], &tables.radial[kj], &tw);
            let (ai, aj) = (tables.radial_key[ki].0, tables.radial_key[kj].0);
            let mut ms = vec![ai.abs_diff(aj), ai + aj];
            ms.dedup();
            ms.into_iter()
                .map(|m| {
                    let (cos_m, sin_m) = tables.trig_for(m);
                    (m, pairwise_dot(&p, cos_m, 0, nn), pairwise_dot(&p, sin_m, 0, nn))
                })
                .collect()
        })
        .collect();
    let mut lookup = std::collections::HashMap::new();
    for (&(ki, kj), rows) in pairs.iter().zip(&reductions) {
        for &(m, c, s) in rows {
            lookup.insert((ki, kj, m), (c, s));
        }
    }

    let mut entries = Vec::with_capacity(total);
    for out in &mode_list {
        for inp in &mode_list {
            let (ko, kin) = (tables.key_index(*out), tables.key_index(*inp));
            let (ki, kj) = (ko.min(kin), ko.max(kin));
            let d = out.l - inp.l;
            let (c, s) = lookup[&(ki, kj, d.unsigned_abs())];
            entries.push(assemble(c, s, d));
        }
    }
    Ok(AmplitudeTable { l_max, p_max, grid: *grid, entries })
}

/// Compute a table where entry (out, in) sees the map rotated by
/// `angle_of(flat_entry_index)`. Used by the rotational-insensitivity study;
/// each entry re-rasterizes the posed map, so this is markedly slower than
/// [`compute_table`].
pub fn compute_table_with_entry_poses<F>(
    map: &TransmissionMap,
    l_max: u32,
    p_max: u32,
    grid: &QuadratureGrid,
    angle_of: F,
) -> Result<AmplitudeTable>
where
    F: Fn(usize) -> f64 + Sync,
{
    let nm = ((2 * l_max + 1) * (p_max + 1)) as usize;
    let total = nm * nm;
    if total > TABLE_ENTRY_BUDGET {
        return Err(Error::ResourceLimit(format!(
            "table of {total} entries exceeds the {TABLE_ENTRY_BUDGET}-entry budget"
        )));
    }
    let mode_list = modes::mode_set(l_max, p_max);
    let diffs: Vec<u32> = (0..=2 * l_max).collect();
    let tables = NodeTables::build(grid, &mode_list, &diffs);
    let base_pose = *map.pose();

    let mut entries = vec![Complex64::new(0.0, 0.0); total];
    entries.par_iter_mut().enumerate().try_for_each(|(idx, slot)| -> Result<()> {
        let o = idx / nm;
        let i = idx % nm;
        let mut pose = base_pose;
        pose.rotation += angle_of(idx);
        let posed = map.clone().with_pose(pose)?;
        let tw = node_weights(&posed, grid);
        *slot = entry_sum(&tables, &tw, mode_list[o], mode_list[i]);
        Ok(())
    })?;
    Ok(AmplitudeTable { l_max, p_max, grid: *grid, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{SceneTransform, Shape};

    fn coarse_grid() -> QuadratureGrid {
        QuadratureGrid::new(6.0, 128).unwrap()
    }

    #[test]
    fn grid_arithmetic() {
        let g = QuadratureGrid::new(4.0, 512).unwrap();
        assert_eq!(g.node_count(), 262144);
        assert_eq!(g.weight(), (8.0 / 512.0) * (8.0 / 512.0));
        assert_eq!(g.node(0), (g.coord(0), g.coord(0)));
        // x varies fastest
        assert_eq!(g.node(1).1, g.node(0).1);
    }

    #[test]
    fn grid_validation() {
        assert!(QuadratureGrid::new(0.0, 512).is_err());
        assert!(QuadratureGrid::new(-1.0, 512).is_err());
        assert!(QuadratureGrid::new(4.0, 8).is_err());
    }

    #[test]
    fn pairwise_matches_exact_on_integers() {
        // integer-valued terms are summed exactly in any order
        let f = |k: usize| Complex64::new(k as f64, -(k as f64));
        let s = pairwise_sum(&f, 0, 1000);
        assert_eq!(s.re, 499500.0);
        assert_eq!(s.im, -499500.0);
    }

    #[test]
    fn fully_opaque_object_gives_exact_zeros() {
        let m = TransmissionMap::from_shape(Shape::Disc { radius: 50.0 }).unwrap();
        let a = compute_amplitude(&m, ModeIndex::new(1, 0), ModeIndex::new(0, 0), &coarse_grid());
        assert_eq!(a, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn half_plane_halves_the_norm() {
        // opaque lower half-plane: T = 1 exactly for y > 0
        let m = TransmissionMap::from_shape(Shape::Rectangle { width: 40.0, height: 20.0 })
            .unwrap()
            .with_pose(SceneTransform { translation: [0.0, -10.0], ..Default::default() })
            .unwrap();
        let a = compute_amplitude(&m, ModeIndex::new(0, 0), ModeIndex::new(0, 0), &coarse_grid());
        assert!((a.re - 0.5).abs() < 1e-3, "re = {}", a.re);
        assert!(a.im.abs() < 1e-12);
    }

    #[test]
    fn identity_object_is_kronecker_within_tolerance() {
        let m = TransmissionMap::identity();
        let g = QuadratureGrid::new(6.0, 256).unwrap();
        let t = compute_table(&m, 2, 1, &g).unwrap();
        for mo in t.modes() {
            for mi in t.modes() {
                let a = t.get(mo, mi).unwrap();
                let want = if mo == mi { 1.0 } else { 0.0 };
                assert!((a - want).norm() < 1e-3, "({mo:?},{mi:?}) -> {a}");
            }
        }
    }

    #[test]
    fn hermitian_for_real_objects() {
        let m = TransmissionMap::from_shape(Shape::Star {
            points: 5,
            r_outer: 0.45,
            r_inner: 0.225,
        })
        .unwrap();
        let t = compute_table(&m, 2, 1, &coarse_grid()).unwrap();
        for mo in t.modes() {
            for mi in t.modes() {
                let a = t.get(mo, mi).unwrap();
                let b = t.get(mi, mo).unwrap();
                assert!((a - b.conj()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_entry_matches_table_entry_exactly() {
        let m = TransmissionMap::from_shape(Shape::Disc { radius: 1.0 }).unwrap();
        let g = coarse_grid();
        let t = compute_table(&m, 2, 1, &g).unwrap();
        for &(lo, po, li, pi) in &[(0, 0, 0, 0), (2, 1, -1, 0), (-2, 0, 2, 1)] {
            let (out, inp) = (ModeIndex::new(lo, po), ModeIndex::new(li, pi));
            let direct = compute_amplitude(&m, out, inp, &g);
            assert_eq!(direct, t.get(out, inp).unwrap());
        }
    }

    #[test]
    fn table_is_linear_in_the_map() {
        use crate::scene::RasterPayload;
        let n = 8;
        let mk = |seed: u64| {
            let mut state = seed;
            let samples: Vec<f64> = (0..n * n)
                .map(|_| {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64
                })
                .collect();
            samples
        };
        let (sa, sb) = (mk(7), mk(99));
        let alpha = 0.375;
        let blend: Vec<f64> = sa
            .iter()
            .zip(&sb)
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        let raster = |samples: Vec<f64>| {
            TransmissionMap::from_raster(RasterPayload {
                width: n,
                height: n,
                pitch: 0.25,
                origin: [0.0, 0.0],
                samples,
            })
            .unwrap()
        };
        let g = QuadratureGrid::new(6.0, 64).unwrap();
        let ta = compute_table(&raster(sa), 2, 1, &g).unwrap();
        let tb = compute_table(&raster(sb), 2, 1, &g).unwrap();
        let tc = compute_table(&raster(blend), 2, 1, &g).unwrap();
        for ((a, b), c) in ta.entries().iter().zip(tb.entries()).zip(tc.entries()) {
            let want = alpha * a + (1.0 - alpha) * b;
            assert!((want - c).norm() < 1e-12);
        }
    }

    #[test]
    fn far_translated_object_leaves_the_kronecker_table() {
        let g = QuadratureGrid::new(6.0, 64).unwrap();
        let far = TransmissionMap::from_shape(Shape::Star {
            points: 5,
            r_outer: 0.45,
            r_inner: 0.225,
        })
        .unwrap()
        .with_pose(SceneTransform { translation: [7.0, 0.0], ..Default::default() })
        .unwrap();
        let t_far = compute_table(&far, 2, 1, &g).unwrap();
        let t_id = compute_table(&TransmissionMap::identity(), 2, 1, &g).unwrap();
        for (a, b) in t_far.entries().iter().zip(t_id.entries()) {
            assert_eq!(a, b); // identical node sums once T = 1 on every node
        }
    }

    #[test]
    fn rotation_phase_law_coarse() {
        let g = QuadratureGrid::new(6.0, 256).unwrap();
        let base = TransmissionMap::from_shape(Shape::Star {
            points: 5,
            r_outer: 0.45,
            r_inner: 0.225,
        })
        .unwrap();
        let theta = 1.0;
        let rot = base
            .clone()
            .with_pose(SceneTransform { rotation: theta, ..Default::default() })
            .unwrap();
        let tb = compute_table(&base, 3, 0, &g).unwrap();
        let tr = compute_table(&rot, 3, 0, &g).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for mo in tb.modes() {
            for mi in tb.modes() {
                let a = tb.get(mo, mi).unwrap();
                let expect = a * Complex64::from_polar(1.0, -((mo.l - mi.l) as f64) * theta);
                let got = tr.get(mo, mi).unwrap();
                num += (got - expect).norm_sqr();
                den += a.norm_sqr();
            }
        }
        assert!((num / den).sqrt() < 0.01, "residual {}", (num / den).sqrt());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = TransmissionMap::from_shape(Shape::Disc { radius: 0.8 }).unwrap();
        let g = QuadratureGrid::new(5.0, 32).unwrap();
        let t = compute_table(&m, 1, 1, &g).unwrap();
        let text = t.to_csv(&["roundtrip test".into()]);
        let back = AmplitudeTable::from_csv(&text).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn oversized_table_is_refused() {
        let m = TransmissionMap::identity();
        let g = coarse_grid();
        match compute_table(&m, 300, 7, &g) {
            Err(Error::ResourceLimit(_)) => {}
            other => panic!("expected resource-limit error, got {other:?}"),
        }
    }

    #[test]
    fn mode_offsets_are_lexicographic() {
        let t = AmplitudeTable::kronecker(2, 1, QuadratureGrid::default());
        assert_eq!(t.mode_offset(ModeIndex::new(-2, 0)), Some(0));
        assert_eq!(t.mode_offset(ModeIndex::new(-2, 1)), Some(1));
        assert_eq!(t.mode_offset(ModeIndex::new(2, 1)), Some(9));
        assert_eq!(t.mode_offset(ModeIndex::new(3, 0)), None);
    }
}
