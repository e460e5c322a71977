//! Point sets on [0,1]^d: distances, the perturbed sampling grid, radius
//! queries backed by uniform-grid binning, and subset draws.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// A location in R^d, d in {1,2,3}.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(
            !coords.is_empty() && coords.len() <= 3,
            "points must have dimension 1..=3"
        );
        assert!(coords.iter().all(|c| c.is_finite()), "coordinates must be finite");
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn distance(a: &Point, b: &Point) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(a.coords
        .iter()
        .zip(&b.coords)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// An ordered set of distinct locations sharing one dimension.
#[derive(Debug, Clone)]
pub struct LocationSet {
    points: Vec<Point>,
    dim: usize,
}

impl LocationSet {
    /// Builds a set, checking dimensions and pairwise distinctness.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::InvalidParameter("location set must be nonempty".into()));
        };
        let dim = first.dim();
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::InvalidParameter("mixed point dimensions".into()));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidParameter(format!(
                        "duplicate points at indices {i} and {j}"
                    )));
                }
            }
        }
        Ok(LocationSet { points, dim })
    }

    /// Internal constructor for point lists already known to be distinct
    /// (grid construction, subsampling).
    fn new_unchecked(points: Vec<Point>) -> Self {
        let dim = points[0].dim();
        LocationSet { points, dim }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// Distance between members i and j.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        distance(&self.points[i], &self.points[j]).expect("same-set points share a dimension")
    }

    /// Writes `x,y[,z]` CSV with full double precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: &[&str] = match self.dim {
            1 => &["x"],
            2 => &["x", "y"],
            _ => &["x", "y", "z"],
        };
        writeln!(w, "{}", header.join(","))?;
        for p in &self.points {
            let row: Vec<String> = p.coords().iter().map(|c| format!("{c:.16e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads the CSV produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 || line.is_empty() {
                continue; // header
            }
            let coords: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
            let coords =
                coords.map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            points.push(Point::new(coords));
        }
        LocationSet::new(points)
    }

    pub fn read_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Regular grid over [0,1]^2 with the given increment, each coordinate
/// shifted by an independent uniform draw on [-jitter, jitter].
///
/// Axis values are {k * increment : k >= 0, k * increment <= 1}; increment
/// 0.03 yields 34 values per axis and n = 1156. Perturbed coordinates are
/// not clamped to the unit square.
pub fn perturbed_grid(increment: f64, jitter: f64, seed: u64) -> Result<LocationSet> {
    if !(increment > 0.0) {
        return Err(Error::InvalidParameter("increment must be positive".into()));
    }
    if jitter < 0.0 {
        return Err(Error::InvalidParameter("jitter must be nonnegative".into()));
    }
    let mut axis = Vec::new();
    let mut k = 0u64;
    loop {
        let v = k as f64 * increment;
        if v > 1.0 + 1e-12 {
            break;
        }
        axis.push(v.min(1.0));
        k += 1;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(axis.len() * axis.len());
    for &x in &axis {
        for &y in &axis {
            let dx = if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
            let dy = if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
            points.push(Point::new(vec![x + dx, y + dy]));
        }
    }
    // jitter < increment/2 keeps grid points distinct; larger jitter could in
    // principle collide, so fall back to the checked constructor there
    if jitter * 2.0 < increment {
        Ok(LocationSet::new_unchecked(points))
    } else {
        LocationSet::new(points)
    }
}

/// Uniform-grid spatial index with cell size = query radius.
fn cell_of(p: &Point, origin: &[f64], cell: f64) -> [i64; 3] {
    let mut c = [0i64; 3];
    for (k, &x) in p.coords().iter().enumerate() {
        c[k] = ((x - origin[k]) / cell).floor() as i64;
    }
    c
}

/// Indices i with distance(center, s_i) < radius (strictly), via binning.
pub fn neighbors_within(set: &LocationSet, center: &Point, radius: f64) -> Result<Vec<usize>> {
    if radius < 0.0 {
        return Err(Error::InvalidParameter("radius must be nonnegative".into()));
    }
    if center.dim() != set.dim() {
        return Err(Error::DimensionMismatch(center.dim(), set.dim()));
    }
    if radius == 0.0 {
        return Ok(Vec::new());
    }
    let d = set.dim();
    let mut origin = [f64::INFINITY; 3];
    for p in set.points() {
        for k in 0..d {
            origin[k] = origin[k].min(p.coords()[k]);
        }
    }
    for o in origin.iter_mut().skip(d) {
        *o = 0.0;
    }
    let mut bins: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in set.points().iter().enumerate() {
        bins.entry(cell_of(p, &origin, radius)).or_default().push(i);
    }
    let cc = cell_of(center, &origin, radius);
    let mut out = Vec::new();
    let range = |k: usize| if k < d { -1..=1 } else { 0..=0 };
    for dx in range(0) {
        for dy in range(1) {
            for dz in range(2) {
                let key = [cc[0] + dx, cc[1] + dy, cc[2] + dz];
                if let Some(ids) = bins.get(&key) {
                    for &i in ids {
                        if distance(center, set.point(i))? < radius {
                            out.push(i);
                        }
                    }
                }
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Reusable spatial index for repeated radius queries against one set.
pub struct NeighborIndex<'a> {
    set: &'a LocationSet,
    origin: [f64; 3],
    cell: f64,
    bins: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(set: &'a LocationSet, radius: f64) -> Self {
        let d = set.dim();
        let mut origin = [0.0f64; 3];
        for k in 0..d {
            origin[k] = set
                .points()
                .iter()
                .map(|p| p.coords()[k])
                .fold(f64::INFINITY, f64::min);
        }
        let cell = if radius > 0.0 { radius } else { 1.0 };
        let mut bins: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in set.points().iter().enumerate() {
            bins.entry(cell_of(p, &origin, cell)).or_default().push(i);
        }
        NeighborIndex { set, origin, cell, bins }
    }

    /// Indices with distance(center, s_i) < radius used at construction.
    pub fn query(&self, center: &Point) -> Vec<usize> {
        let d = self.set.dim();
        let cc = cell_of(center, &self.origin, self.cell);
        let mut out = Vec::new();
        let range = |k: usize| if k < d { -1..=1 } else { 0..=0 };
        for dx in range(0) {
            for dy in range(1) {
                for dz in range(2) {
                    let key = [cc[0] + dx, cc[1] + dy, cc[2] + dz];
                    if let Some(ids) = self.bins.get(&key) {
                        for &i in ids {
                            let r = distance(center, self.set.point(i))
                                .expect("index points share the set dimension");
                            if r < self.cell {
                                out.push(i);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Draws m points uniformly without replacement; deterministic given seed.
pub fn subsample(set: &LocationSet, m: usize, seed: u64) -> Result<LocationSet> {
    if m == 0 {
        return Err(Error::InvalidParameter("subsample size must be positive".into()));
    }
    if m > set.len() {
        return Err(Error::SubsampleTooLarge { requested: m, available: set.len() });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    // partial Fisher-Yates over an index vector
    let mut idx: Vec<usize> = (0..set.len()).collect();
    for i in 0..m {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
    let points = idx[..m].iter().map(|&i| set.point(i).clone()).collect();
    Ok(LocationSet::new_unchecked(points))
}
