//! Finite direction sets on the unit sphere, pair scores, and the
//! equal-area patch partition used as the classical baseline encoding.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

const UNIT_TOLERANCE: f64 = 1e-12;
/// Slack accepted when reading directions from text, which rarely carries
/// 16 significant digits. Accepted vectors are renormalized.
const PARSE_UNIT_TOLERANCE: f64 = 1e-6;
const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// A unit 3-vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Direction {
    x: f64,
    y: f64,
    z: f64,
}

impl Direction {
    pub const PLUS_Z: Direction = Direction { x: 0.0, y: 0.0, z: 1.0 };
    pub const MINUS_Z: Direction = Direction { x: 0.0, y: 0.0, z: -1.0 };
    pub const PLUS_X: Direction = Direction { x: 1.0, y: 0.0, z: 0.0 };

    /// Builds a direction, rejecting vectors whose norm is not 1 within 1e-12.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm2 = x * x + y * y + z * z;
        ensure!(
            norm2.is_finite() && (norm2 - 1.0).abs() <= UNIT_TOLERANCE,
            "direction ({x}, {y}, {z}) is not a unit vector (|v|^2 = {norm2})"
        );
        Ok(Direction { x, y, z })
    }

    /// Scales a non-zero finite vector onto the sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        ensure!(
            norm.is_finite() && norm > 0.0,
            "cannot normalize ({x}, {y}, {z})"
        );
        Ok(Direction {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Polar angle `theta` from +z, azimuth `phi` from +x.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Direction {
            x: st * cp,
            y: st * sp,
            z: ct,
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn polar_angle(&self) -> f64 {
        self.z.clamp(-1.0, 1.0).acos()
    }

    /// Azimuth in `[0, 2π)`.
    pub fn azimuth(&self) -> f64 {
        let phi = self.y.atan2(self.x);
        if phi < 0.0 {
            phi + 2.0 * PI
        } else {
            phi
        }
    }

    /// Great-circle angle to `other`.
    pub fn angle_to(&self, other: &Direction) -> f64 {
        // atan2 form stays accurate for nearly parallel vectors.
        let cx = self.y * other.z - self.z * other.y;
        let cy = self.z * other.x - self.x * other.z;
        let cz = self.x * other.y - self.y * other.x;
        (cx * cx + cy * cy + cz * cz).sqrt().atan2(self.dot(other))
    }

    pub fn negated(&self) -> Self {
        Direction {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Right-handed rotation by `angle` about `axis` (Rodrigues' formula).
    pub fn rotated_about(&self, axis: &Direction, angle: f64) -> Direction {
        let (s, c) = angle.sin_cos();
        let k = axis;
        let kxv = [
            k.y * self.z - k.z * self.y,
            k.z * self.x - k.x * self.z,
            k.x * self.y - k.y * self.x,
        ];
        let kv = k.dot(self) * (1.0 - c);
        Direction {
            x: self.x * c + kxv[0] * s + k.x * kv,
            y: self.y * c + kxv[1] * s + k.y * kv,
            z: self.z * c + kxv[2] * s + k.z * kv,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl TryFrom<[f64; 3]> for Direction {
    type Error = Error;

    fn try_from([x, y, z]: [f64; 3]) -> Result<Self> {
        let norm2 = x * x + y * y + z * z;
        ensure!(
            norm2.is_finite() && (norm2.sqrt() - 1.0).abs() <= PARSE_UNIT_TOLERANCE,
            "direction [{x}, {y}, {z}] is not a unit vector"
        );
        Direction::normalized(x, y, z)
    }
}

impl From<Direction> for [f64; 3] {
    fn from(d: Direction) -> Self {
        d.to_array()
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.x, self.y, self.z)
    }
}

/// An ordered, nonempty set of pairwise distinct directions.
///
/// Serialized as a bare JSON list of `[x, y, z]` triples; labels are a
/// display convenience and are not serialized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Direction>", into = "Vec<Direction>")]
pub struct DirectionSet {
    directions: Vec<Direction>,
    labels: Option<Vec<String>>,
}

impl DirectionSet {
    pub fn new(directions: Vec<Direction>) -> Result<Self> {
        ensure!(!directions.is_empty(), "direction set is empty");
        for (i, a) in directions.iter().enumerate() {
            for (j, b) in directions.iter().enumerate().skip(i + 1) {
                ensure!(
                    a.dot(b) < 1.0 - DUPLICATE_TOLERANCE,
                    "directions {i} and {j} coincide ({a} vs {b})"
                );
            }
        }
        Ok(DirectionSet {
            directions,
            labels: None,
        })
    }

    /// Skips the quadratic duplicate check for sets that are distinct by construction.
    pub(crate) fn from_distinct(directions: Vec<Direction>) -> Self {
        debug_assert!(!directions.is_empty());
        DirectionSet {
            directions,
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        ensure!(
            labels.len() == self.directions.len(),
            "{} labels for {} directions",
            labels.len(),
            self.directions.len()
        );
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Direction> {
        self.directions.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Direction> {
        self.directions.iter()
    }

    pub fn as_slice(&self) -> &[Direction] {
        &self.directions
    }

    pub fn label(&self, index: usize) -> String {
        match &self.labels {
            Some(labels) => labels[index].clone(),
            None => index.to_string(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("direction sets always serialize")
    }
}

impl TryFrom<Vec<Direction>> for DirectionSet {
    type Error = Error;

    fn try_from(directions: Vec<Direction>) -> Result<Self> {
        DirectionSet::new(directions)
    }
}

impl From<DirectionSet> for Vec<Direction> {
    fn from(set: DirectionSet) -> Self {
        set.directions
    }
}

/// `(1 + n·m) / 2`, the squared overlap of the two spin coherent states.
pub fn default_score(n: &Direction, m: &Direction) -> f64 {
    (1.0 + n.dot(m)) / 2.0
}

type ScoreFn = dyn Fn(&Direction, &Direction) -> f64 + Send + Sync;

/// A bounded score `f(sent, guessed)` with its declared bound `f_max`.
#[derive(Clone)]
pub struct ScoreFunction {
    name: String,
    f_max: f64,
    eval: Arc<ScoreFn>,
}

impl ScoreFunction {
    pub fn new<F>(name: impl Into<String>, f_max: f64, eval: F) -> Result<Self>
    where
        F: Fn(&Direction, &Direction) -> f64 + Send + Sync + 'static,
    {
        ensure!(
            f_max.is_finite() && f_max >= 0.0,
            "score bound must be finite and non-negative, got {f_max}"
        );
        Ok(ScoreFunction {
            name: name.into(),
            f_max,
            eval: Arc::new(eval),
        })
    }

    /// The default fidelity score with `f_max = 1`.
    pub fn fidelity() -> Self {
        ScoreFunction {
            name: "fidelity".into(),
            f_max: 1.0,
            eval: Arc::new(default_score),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn eval(&self, n: &Direction, m: &Direction) -> f64 {
        (self.eval)(n, m)
    }

    /// Exhaustively checks `|f| <= f_max` over every pair of the two sets.
    pub fn check_bounded(&self, inputs: &DirectionSet, guesses: &DirectionSet) -> Result<()> {
        for (i, n) in inputs.iter().enumerate() {
            for (j, m) in guesses.iter().enumerate() {
                let v = self.eval(n, m);
                ensure!(
                    v.is_finite() && v.abs() <= self.f_max,
                    "score `{}` at ({i}, {j}) is {v}, exceeding f_max = {}",
                    self.name,
                    self.f_max
                );
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ScoreFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoreFunction")
            .field("name", &self.name)
            .field("f_max", &self.f_max)
            .finish()
    }
}

/// One latitude band of a [`SpherePartition`]: `z` in `[z_bottom, z_top]`
/// split into `sectors` equal azimuthal wedges starting at `phi = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub z_top: f64,
    pub z_bottom: f64,
    pub sectors: usize,
    pub first_patch: usize,
}

impl Band {
    pub fn theta_top(&self) -> f64 {
        self.z_top.acos()
    }

    pub fn theta_bottom(&self) -> f64 {
        self.z_bottom.acos()
    }
}

/// Equal-area partition of the sphere into `2^n_bits` patches.
///
/// Two polar caps hold one patch each. The zone between them is cut into
/// latitude bands whose patch counts are proportional to their areas, and
/// each band is cut into equal azimuthal sectors. Patches are numbered from
/// the north pole southwards, and eastwards from `phi = 0` inside a band.
#[derive(Clone, Debug, PartialEq)]
pub struct SpherePartition {
    n_bits: u32,
    bands: Vec<Band>,
}

pub const MAX_PARTITION_BITS: u32 = 30;

/// Builds the equal-area band partition with `2^n_bits` patches.
pub fn build_band_partition(n_bits: u32) -> Result<SpherePartition> {
    ensure!(
        (1..=MAX_PARTITION_BITS).contains(&n_bits),
        "partition bits must be in 1..={MAX_PARTITION_BITS}, got {n_bits}"
    );
    let patches = 1usize << n_bits;
    let p = patches as f64;
    let patch_area = 4.0 * PI / p;

    // Patch counts per band, north to south.
    let mut counts = vec![1usize];
    if patches > 2 {
        let cap_theta = (1.0 - 2.0 / p).acos();
        let zone = PI - 2.0 * cap_theta;
        let collars = ((zone / patch_area.sqrt()).round() as usize).max(1);
        let step = zone / collars as f64;
        let mut assigned = 0usize;
        let mut ideal_cum = 0.0;
        for k in 0..collars {
            let top = cap_theta + k as f64 * step;
            let bottom = if k + 1 == collars {
                PI - cap_theta
            } else {
                top + step
            };
            ideal_cum += 2.0 * PI * (top.cos() - bottom.cos()) / patch_area;
            let target = if k + 1 == collars {
                patches - 2
            } else {
                (ideal_cum.round() as usize).min(patches - 2)
            };
            if target > assigned {
                counts.push(target - assigned);
                assigned = target;
            }
        }
    }
    counts.push(1);

    let mut bands = Vec::with_capacity(counts.len());
    let mut cum = 0usize;
    let mut z_top = 1.0;
    for (b, &n) in counts.iter().enumerate() {
        let first_patch = cum;
        cum += n;
        let z_bottom = if b + 1 == counts.len() {
            -1.0
        } else {
            1.0 - 2.0 * cum as f64 / p
        };
        bands.push(Band {
            z_top,
            z_bottom,
            sectors: n,
            first_patch,
        });
        z_top = z_bottom;
    }
    debug_assert_eq!(cum, patches);
    Ok(SpherePartition { n_bits, bands })
}

impl SpherePartition {
    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn patch_count(&self) -> usize {
        1usize << self.n_bits
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// Polar angles of the band boundaries, north to south, including 0 and π.
    pub fn band_boundaries(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.bands.iter().map(|b| b.theta_bottom()))
            .collect()
    }

    fn band_of_patch(&self, patch: usize) -> (usize, &Band) {
        let b = self.bands.partition_point(|band| band.first_patch <= patch) - 1;
        (b, &self.bands[b])
    }

    /// Index of the patch containing `d`. Boundary points go to the lower index.
    pub fn patch_index(&self, d: &Direction) -> usize {
        let z = d.z().clamp(-1.0, 1.0);
        let b = self
            .bands
            .partition_point(|band| z < band.z_bottom)
            .min(self.bands.len() - 1);
        let band = &self.bands[b];
        if band.sectors == 1 {
            return band.first_patch;
        }
        let n = band.sectors as f64;
        let sector = ((d.azimuth() * n / (2.0 * PI)).ceil() as usize)
            .saturating_sub(1)
            .min(band.sectors - 1);
        band.first_patch + sector
    }

    /// Representative direction of `patch`: the pole for caps, otherwise the
    /// area midpoint of the band at the middle azimuth of the sector.
    pub fn patch_center(&self, patch: usize) -> Result<Direction> {
        ensure!(
            patch < self.patch_count(),
            "patch {patch} out of range for {} patches",
            self.patch_count()
        );
        let (b, band) = self.band_of_patch(patch);
        if b == 0 {
            return Ok(Direction::PLUS_Z);
        }
        if b + 1 == self.bands.len() {
            return Ok(Direction::MINUS_Z);
        }
        let z = 0.5 * (band.z_top + band.z_bottom);
        let sector = patch - band.first_patch;
        let phi = 2.0 * PI * (sector as f64 + 0.5) / band.sectors as f64;
        Ok(Direction::from_spherical(z.acos(), phi))
    }

    /// All patch centers in index order.
    pub fn centers(&self) -> DirectionSet {
        DirectionSet::from_distinct(
            (0..self.patch_count())
                .map(|k| self.patch_center(k).expect("index in range"))
                .collect(),
        )
    }

    /// Solid angle of `patch`.
    pub fn patch_area(&self, patch: usize) -> Result<f64> {
        ensure!(
            patch < self.patch_count(),
            "patch {patch} out of range for {} patches",
            self.patch_count()
        );
        let (_, band) = self.band_of_patch(patch);
        Ok(2.0 * PI * (band.z_top - band.z_bottom) / band.sectors as f64)
    }

    /// Closed containment test against the patch's latitude and azimuth limits.
    pub fn contains(&self, patch: usize, d: &Direction) -> bool {
        if patch >= self.patch_count() {
            return false;
        }
        let (_, band) = self.band_of_patch(patch);
        let z = d.z();
        if z > band.z_top || z < band.z_bottom {
            return false;
        }
        if band.sectors == 1 {
            return true;
        }
        let width = 2.0 * PI / band.sectors as f64;
        let sector = (patch - band.first_patch) as f64;
        let phi = d.azimuth();
        let (lo, hi) = (sector * width, (sector + 1.0) * width);
        (phi >= lo && phi <= hi) || (phi == 0.0 && hi >= 2.0 * PI)
    }
}
