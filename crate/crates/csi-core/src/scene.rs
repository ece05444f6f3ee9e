//! Object transmission functions T(x, y): analytic shapes or imported
//! rasters, with a pose transform (scale, then rotate, then translate).
//!
//! Opaque material maps to T = 0 and empty space to T = 1; the `invert`
//! flag swaps the two. Positive pose rotation turns the object clockwise,
//! i.e. sampling evaluates the unposed map at the counterclockwise-rotated
//! point — the convention under which a rotation by theta multiplies the
//! transition amplitude a^{l'l} by exp(-i (l'-l) theta).

use crate::error::{Error, Result};
use crate::pgm;

/// Analytic opaque-shape descriptors. Lengths are in waist units.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Disc { radius: f64 },
    Annulus { r_in: f64, r_out: f64 },
    Rectangle { width: f64, height: f64 },
    Star { points: u32, r_outer: f64, r_inner: f64 },
    Fan { bands: u32, r_in: f64, r_out: f64, duty: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Shape {
    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        match *self {
            Shape::Disc { radius } => {
                if !(radius >= 0.0) {
                    return bad(format!("disc radius {radius} must be >= 0"));
                }
            }
            Shape::Annulus { r_in, r_out } => {
                if !(r_in >= 0.0 && r_out > r_in) {
                    return bad(format!("annulus needs 0 <= r_in < r_out, got ({r_in}, {r_out})"));
                }
            }
            Shape::Rectangle { width, height } => {
                if !(width >= 0.0 && height >= 0.0) {
                    return bad(format!("rectangle sides must be >= 0, got ({width}, {height})"));
                }
            }
            Shape::Star { points, r_outer, r_inner } => {
                if points == 0 {
                    return bad("star needs at least one point".into());
                }
                if !(r_inner > 0.0 && r_inner < r_outer) {
                    return bad(format!("star needs 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"));
                }
            }
            Shape::Fan { bands, r_in, r_out, duty } => {
                if bands == 0 {
                    return bad("fan needs at least one band".into());
                }
                if !(r_in >= 0.0 && r_out > r_in) {
                    return bad(format!("fan needs 0 <= r_in < r_out, got ({r_in}, {r_out})"));
                }
                if !(0.0..=1.0).contains(&duty) {
                    return bad(format!("fan duty {duty} must lie in [0, 1]"));
                }
            }
            Shape::Polygon { ref vertices } => {
                if vertices.len() < 3 {
                    return bad("polygon needs at least 3 vertices".into());
                }
            }
        }
        Ok(())
    }

    /// Parse a textual descriptor, e.g. `star:5`, `disc:1.0`, `fan:8:0.25:3:0.5`,
    /// `annulus:0.5:1`, `rect:0.8:0.3`, `polygon:0,0;1,0;0,1`, `identity`.
    pub fn parse(desc: &str) -> Result<Shape> {
        let bad = |msg: String| Error::InvalidConfig(msg);
        let mut parts = desc.split(':');
        let kind = parts.next().unwrap_or("");
        let rest: Vec<&str> = parts.collect();
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| bad(format!("bad number `{s}` in shape `{desc}`")))
        };
        let shape = match kind {
            "identity" => Shape::Disc { radius: 0.0 },
            "disc" => Shape::Disc { radius: if rest.is_empty() { 1.0 } else { num(rest[0])? } },
            "annulus" => {
                if rest.len() != 2 {
                    return Err(bad(format!("annulus takes r_in:r_out, got `{desc}`")));
                }
                Shape::Annulus { r_in: num(rest[0])?, r_out: num(rest[1])? }
            }
            "rect" => {
                if rest.len() != 2 {
                    return Err(bad(format!("rect takes width:height, got `{desc}`")));
                }
                Shape::Rectangle { width: num(rest[0])?, height: num(rest[1])? }
            }
            "star" => {
                if rest.is_empty() || rest.len() > 3 {
                    return Err(bad(format!("star takes points[:r_outer[:r_inner]], got `{desc}`")));
                }
                let points: u32 = rest[0]
                    .parse()
                    .map_err(|_| bad(format!("bad point count `{}`", rest[0])))?;
                let r_outer = if rest.len() > 1 { num(rest[1])? } else { 0.45 };
                let r_inner = if rest.len() > 2 { num(rest[2])? } else { 0.5 * r_outer };
                Shape::Star { points, r_outer, r_inner }
            }
            "fan" => {
                if rest.is_empty() || (rest.len() != 1 && rest.len() != 4) {
                    return Err(bad(format!("fan takes bands[:r_in:r_out:duty], got `{desc}`")));
                }
                let bands: u32 = rest[0]
                    .parse()
                    .map_err(|_| bad(format!("bad band count `{}`", rest[0])))?;
                let (r_in, r_out, duty) = if rest.len() == 4 {
                    (num(rest[1])?, num(rest[2])?, num(rest[3])?)
                } else {
                    (0.25, 3.0, 0.5)
                };
                Shape::Fan { bands, r_in, r_out, duty }
            }
            "polygon" => {
                if rest.len() != 1 {
                    return Err(bad(format!("polygon takes x,y;x,y;..., got `{desc}`")));
                }
                let mut vertices = Vec::new();
                for pair in rest[0].split(';') {
                    let (x, y) = pair
                        .split_once(',')
                        .ok_or_else(|| bad(format!("bad vertex `{pair}`")))?;
                    vertices.push([num(x)?, num(y)?]);
                }
                Shape::Polygon { vertices }
            }
            _ => return Err(bad(format!("unknown shape `{desc}`"))),
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// Vertices of an N-pointed star: 2N corners alternating outer/inner radius,
/// first outer corner on the +x axis.
pub fn star_polygon(points: u32, r_outer: f64, r_inner: f64) -> Vec<[f64; 2]> {
    let mut verts = Vec::with_capacity(2 * points as usize);
    for k in 0..2 * points {
        let r = if k % 2 == 0 { r_outer } else { r_inner };
        let ang = std::f64::consts::PI * k as f64 / points as f64;
        verts.push([r * ang.cos(), r * ang.sin()]);
    }
    verts
}

/// Even-odd crossing test.
fn polygon_contains(verts: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = verts.len() - 1;
    for i in 0..verts.len() {
        let [xi, yi] = verts[i];
        let [xj, yj] = verts[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Pose applied to a map; composition order is fixed: scale, then rotate,
/// then translate. Translation is in waist units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneTransform {
    pub rotation: f64,
    pub translation: [f64; 2],
    pub scale: f64,
}

impl Default for SceneTransform {
    fn default() -> Self {
        Self { rotation: 0.0, translation: [0.0, 0.0], scale: 1.0 }
    }
}

impl SceneTransform {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "pose scale {} must be positive",
                self.scale
            )));
        }
        Ok(())
    }

    /// Map a world point back into the unposed map's frame.
    fn unmap(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.translation[0];
        let dy = y - self.translation[1];
        let (s, c) = self.rotation.sin_cos();
        // counterclockwise rotation of the sample point
        let rx = c * dx - s * dy;
        let ry = s * dx + c * dy;
        (rx / self.scale, ry / self.scale)
    }
}

/// A raster payload in world units: `pitch` is waist units per pixel and
/// `origin` the world position of the raster's center. Rows run top-first,
/// so row 0 has the largest y.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterPayload {
    pub width: usize,
    pub height: usize,
    pub pitch: f64,
    pub origin: [f64; 2],
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Analytic { shape: Shape, star_cache: Option<Vec<[f64; 2]>> },
    Raster(RasterPayload),
}

/// An object transmission function with pose and convention flag.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionMap {
    source: Source,
    pose: SceneTransform,
    invert: bool,
}

impl TransmissionMap {
    pub fn from_shape(shape: Shape) -> Result<Self> {
        shape.validate()?;
        let star_cache = match shape {
            Shape::Star { points, r_outer, r_inner } => {
                Some(star_polygon(points, r_outer, r_inner))
            }
            _ => None,
        };
        Ok(Self {
            source: Source::Analytic { shape, star_cache },
            pose: SceneTransform::default(),
            invert: false,
        })
    }

    /// The empty object: T = 1 everywhere.
    pub fn identity() -> Self {
        Self::from_shape(Shape::Disc { radius: 0.0 }).expect("empty disc is valid")
    }

    pub fn from_raster(raster: RasterPayload) -> Result<Self> {
        if raster.width * raster.height != raster.samples.len() {
            return Err(Error::InvalidGeometry(format!(
                "raster claims {}x{} but carries {} samples",
                raster.width,
                raster.height,
                raster.samples.len()
            )));
        }
        if !(raster.pitch > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "raster pitch {} must be positive",
                raster.pitch
            )));
        }
        Ok(Self { source: Source::Raster(raster), pose: SceneTransform::default(), invert: false })
    }

    /// Parse PGM bytes into a map. Pixel values scale to T = v / maxval
    /// (white transmits); combine with [`with_invert`](Self::with_invert)
    /// for ink-transmits conventions.
    pub fn load_raster(bytes: &[u8], pitch: f64, origin: [f64; 2]) -> Result<Self> {
        let img = pgm::read(bytes)?;
        let maxval = img.maxval as f64;
        let samples = img.samples.iter().map(|&v| v as f64 / maxval).collect();
        Self::from_raster(RasterPayload {
            width: img.width,
            height: img.height,
            pitch,
            origin,
            samples,
        })
    }

    pub fn with_pose(mut self, pose: SceneTransform) -> Result<Self> {
        pose.validate()?;
        self.pose = pose;
        Ok(self)
    }

    pub fn with_invert(mut self, invert: bool) -> Self {
        self.invert = invert;
        self
    }

    pub fn pose(&self) -> &SceneTransform {
        &self.pose
    }

    /// Transmission in [0, 1] at a world point; deterministic.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let (qx, qy) = self.pose.unmap(x, y);
        let t = match &self.source {
            Source::Analytic { shape, star_cache } => {
                let opaque = match *shape {
                    Shape::Disc { radius } => qx * qx + qy * qy < radius * radius,
                    Shape::Annulus { r_in, r_out } => {
                        let r2 = qx * qx + qy * qy;
                        r2 >= r_in * r_in && r2 < r_out * r_out
                    }
                    Shape::Rectangle { width, height } => {
                        qx.abs() < width / 2.0 && qy.abs() < height / 2.0
                    }
                    Shape::Star { .. } => {
                        polygon_contains(star_cache.as_ref().expect("cached"), qx, qy)
                    }
                    Shape::Fan { bands, r_in, r_out, duty } => {
                        let r2 = qx * qx + qy * qy;
                        if r2 >= r_in * r_in && r2 < r_out * r_out {
                            let period = 2.0 * std::f64::consts::PI / bands as f64;
                            let phi = qy.atan2(qx).rem_euclid(2.0 * std::f64::consts::PI);
                            phi.rem_euclid(period) < duty * period
                        } else {
                            false
                        }
                    }
                    Shape::Polygon { ref vertices } => polygon_contains(vertices, qx, qy),
                };
                if opaque {
                    0.0
                } else {
                    1.0
                }
            }
            Source::Raster(r) => {
                let col = ((qx - r.origin[0]) / r.pitch + r.width as f64 / 2.0).floor();
                let row = ((r.origin[1] - qy) / r.pitch + r.height as f64 / 2.0).floor();
                if col >= 0.0 && col < r.width as f64 && row >= 0.0 && row < r.height as f64 {
                    r.samples[row as usize * r.width + col as usize]
                } else {
                    1.0
                }
            }
        };
        if self.invert {
            1.0 - t
        } else {
            t
        }
    }
}
