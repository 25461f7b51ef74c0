//! Generators for the test geometries used throughout the crate.
//!
//! One-dimensional families carry length measure: every vertex weighs the
//! half-sum of its incident edge lengths. Two-dimensional families are
//! king-graph lattices (axis steps of length h plus diagonals of length
//! h*sqrt(2)) with vertex weights given by exact cell or column areas.
//!
//! Families: interval, path, cycle, star, spokes, tangent_circles, comb,
//! circle_plus_ray, three_pronged, cusp, grid, ladder_teeth.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{MmError, Result};
use crate::space::{DiscreteSpace, EdgeSpec, VertexSpec};

/// A family name with numeric parameters; generation is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct ZooSpec {
    pub family: String,
    pub params: BTreeMap<String, f64>,
}

impl ZooSpec {
    pub fn new(family: &str) -> ZooSpec {
        ZooSpec { family: family.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> ZooSpec {
        self.params.insert(key.to_string(), value);
        self
    }

    /// Parse `name` or `name?key=value&key=value`.
    pub fn parse(text: &str) -> Result<ZooSpec> {
        let (family, rest) = match text.split_once('?') {
            Some((f, r)) => (f, Some(r)),
            None => (text, None),
        };
        if family.is_empty() {
            return Err(MmError::Parse("empty family name".into()));
        }
        let mut spec = ZooSpec::new(family);
        if let Some(rest) = rest {
            for pair in rest.split('&').filter(|p| !p.is_empty()) {
                let (k, v) = pair
                    .split_once('=')
                    .ok_or_else(|| MmError::Parse(format!("expected key=value, got `{pair}`")))?;
                let value: f64 = v
                    .parse()
                    .map_err(|_| MmError::Parse(format!("bad numeric value `{v}` for `{k}`")))?;
                spec.params.insert(k.to_string(), value);
            }
        }
        Ok(spec)
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

impl fmt::Display for ZooSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        let mut sep = '?';
        for (k, v) in &self.params {
            write!(f, "{sep}{k}={v}")?;
            sep = '&';
        }
        Ok(())
    }
}

pub const FAMILIES: &[&str] = &[
    "interval",
    "path",
    "cycle",
    "star",
    "spokes",
    "tangent_circles",
    "comb",
    "circle_plus_ray",
    "three_pronged",
    "cusp",
    "grid",
    "ladder_teeth",
];

/// Graph under construction; weights are filled in at the end.
struct Builder {
    vertices: Vec<VertexSpec>,
    index: HashMap<String, usize>,
    edges: Vec<EdgeSpec>,
    meta: HashMap<String, String>,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            vertices: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            meta: HashMap::new(),
        }
    }

    fn vertex(&mut self, id: String, coord: Option<[f64; 2]>) -> usize {
        if let Some(&i) = self.index.get(&id) {
            return i;
        }
        let i = self.vertices.len();
        self.index.insert(id.clone(), i);
        self.vertices.push(VertexSpec { id, weight: 0.0, coord });
        i
    }

    fn edge(&mut self, u: usize, v: usize, len: f64) {
        self.edges.push(EdgeSpec {
            u: self.vertices[u].id.clone(),
            v: self.vertices[v].id.clone(),
            len,
        });
    }

    fn landmark(&mut self, name: &str, v: usize) {
        self.meta.insert(name.to_string(), self.vertices[v].id.clone());
    }

    /// Finish with length measure: each vertex weighs half its incident
    /// edge lengths, so total measure equals total edge length.
    fn finish_length_measure(mut self, mesh: f64, tau: Option<f64>) -> Result<DiscreteSpace> {
        let mut w = vec![0.0; self.vertices.len()];
        for e in &self.edges {
            let u = self.index[&e.u];
            let v = self.index[&e.v];
            w[u] += e.len / 2.0;
            w[v] += e.len / 2.0;
        }
        for (spec, w) in self.vertices.iter_mut().zip(w) {
            spec.weight = w;
        }
        let mut space = DiscreteSpace::new(self.vertices, self.edges, mesh, tau)?;
        space.meta = self.meta;
        Ok(space)
    }

    /// Finish with explicitly assigned weights.
    fn finish_weighted(self, mesh: f64, tau: Option<f64>) -> Result<DiscreteSpace> {
        let mut space = DiscreteSpace::new(self.vertices, self.edges, mesh, tau)?;
        space.meta = self.meta;
        Ok(space)
    }

    fn set_weight(&mut self, v: usize, w: f64) {
        self.vertices[v].weight = w;
    }
}

fn positive(spec: &ZooSpec, key: &str, default: f64) -> Result<f64> {
    let v = spec.get(key, default);
    if !(v > 0.0) || !v.is_finite() {
        return Err(MmError::Parameter(format!(
            "{}: parameter `{key}` must be positive, got {v}",
            spec.family
        )));
    }
    Ok(v)
}

fn count(spec: &ZooSpec, key: &str, default: f64, max: usize) -> Result<usize> {
    let v = spec.get(key, default);
    if v < 1.0 || v.fract() != 0.0 || v > max as f64 {
        return Err(MmError::Parameter(format!(
            "{}: parameter `{key}` must be an integer in 1..={max}, got {v}",
            spec.family
        )));
    }
    Ok(v as usize)
}

pub fn generate(spec: &ZooSpec) -> Result<DiscreteSpace> {
    match spec.family.as_str() {
        "interval" => interval(spec, 1.0),
        "path" => interval(spec, 10.0),
        "cycle" => cycle(spec),
        "star" => star(spec),
        "spokes" => spokes(spec),
        "tangent_circles" => tangent_circles(spec),
        "comb" => comb(spec),
        "circle_plus_ray" => circle_plus_ray(spec),
        "three_pronged" => three_pronged(spec),
        "cusp" => cusp(spec),
        "grid" => grid(spec),
        "ladder_teeth" => ladder_teeth(spec),
        other => Err(MmError::Parameter(format!(
            "unknown family `{other}`; known: {}",
            FAMILIES.join(", ")
        ))),
    }
}

/// Segment [0, l] at mesh h. Landmarks: left, right, third (vertex nearest
/// l/3).
fn interval(spec: &ZooSpec, default_len: f64) -> Result<DiscreteSpace> {
    let l = positive(spec, "l", default_len)?;
    let h = positive(spec, "h", 0.01)?;
    let n = ((l / h).round() as usize).max(1);
    let step = l / n as f64;
    let mut b = Builder::new();
    let verts: Vec<usize> = (0..=n)
        .map(|i| b.vertex(format!("v{i}"), Some([i as f64 * step, 0.0])))
        .collect();
    for i in 0..n {
        b.edge(verts[i], verts[i + 1], step);
    }
    b.landmark("left", verts[0]);
    b.landmark("right", verts[n]);
    let third = ((l / 3.0) / step).round() as usize;
    b.landmark("third", verts[third.min(n)]);
    b.finish_length_measure(step, None)
}

/// Circle of circumference l; vertex count is forced even so `antipode`
/// is exactly opposite `base`.
fn cycle(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let l = positive(spec, "l", 1.0)?;
    let h = positive(spec, "h", 0.01)?;
    let mut n = ((l / h).round() as usize).max(4);
    n += n % 2;
    let step = l / n as f64;
    let mut b = Builder::new();
    let verts: Vec<usize> = (0..n).map(|i| b.vertex(format!("c{i}"), None)).collect();
    for i in 0..n {
        b.edge(verts[i], verts[(i + 1) % n], step);
    }
    b.landmark("base", verts[0]);
    b.landmark("antipode", verts[n / 2]);
    b.finish_length_measure(step, None)
}

/// d segments of length l glued at a center vertex.
fn star(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let d = count(spec, "d", 3.0, 64)?;
    let l = positive(spec, "l", 1.0)?;
    let h = positive(spec, "h", 0.01)?;
    if d < 2 {
        return Err(MmError::Parameter("star: need d >= 2".into()));
    }
    let n = ((l / h).round() as usize).max(1);
    let step = l / n as f64;
    let mut b = Builder::new();
    let center = b.vertex("o".into(), Some([0.0, 0.0]));
    for j in 0..d {
        let mut prev = center;
        for i in 1..=n {
            let v = b.vertex(format!("a{j}_{i}"), None);
            b.edge(prev, v, step);
            prev = v;
        }
        b.landmark(&format!("tip{j}"), prev);
    }
    b.landmark("center", center);
    b.finish_length_measure(step, None)
}

/// m segments from a common center, segment j of length 2^(1-j).
fn spokes(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let m = count(spec, "m", 6.0, 40)?;
    let h = positive(spec, "h", 0.01)?;
    let mut b = Builder::new();
    let center = b.vertex("o".into(), None);
    for j in 1..=m {
        let len = (2.0_f64).powi(1 - j as i32);
        let segs = ((len / h).round() as usize).max(1);
        let step = len / segs as f64;
        let mut prev = center;
        for i in 1..=segs {
            let v = b.vertex(format!("s{j}_{i}"), None);
            b.edge(prev, v, step);
            prev = v;
        }
    }
    b.landmark("center", center);
    b.finish_length_measure(h, None)
}

/// m circles, circle j of radius 2^(1-j), all through one tangency vertex.
fn tangent_circles(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let m = count(spec, "m", 2.0, 20)?;
    let h = positive(spec, "h", 0.01)?;
    let mut b = Builder::new();
    let origin = b.vertex("o".into(), None);
    for j in 1..=m {
        let radius = (2.0_f64).powi(1 - j as i32);
        let circumference = 2.0 * std::f64::consts::PI * radius;
        let n = ((circumference / h).round() as usize).max(4);
        let step = circumference / n as f64;
        let mut prev = origin;
        for i in 1..n {
            let v = b.vertex(format!("t{j}_{i}"), None);
            b.edge(prev, v, step);
            prev = v;
        }
        b.edge(prev, origin, step);
    }
    b.landmark("tangency", origin);
    b.finish_length_measure(h, None)
}

/// Two unit axis segments from the origin plus chords joining (0, 2^-j) to
/// (2^-j, 0). Chords accumulate at the origin down to mesh scale, which is
/// what keeps the origin from being a cut point.
fn comb(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let h = positive(spec, "h", 0.01)?;
    let auto_m = (1.0 / h).log2().ceil() as f64 + 1.0;
    let m = count(spec, "m", auto_m, 60)?;
    let n = ((1.0 / h).round() as usize).max(2);
    let step = 1.0 / n as f64;
    let mut b = Builder::new();
    let origin = b.vertex("o".into(), Some([0.0, 0.0]));
    let mut xs = vec![origin];
    let mut ys = vec![origin];
    for i in 1..=n {
        let x = b.vertex(format!("x{i}"), Some([i as f64 * step, 0.0]));
        b.edge(xs[i - 1], x, step);
        xs.push(x);
        let y = b.vertex(format!("y{i}"), Some([0.0, i as f64 * step]));
        b.edge(ys[i - 1], y, step);
        ys.push(y);
    }
    let mut used = std::collections::HashSet::new();
    for j in 1..=m {
        let t = (2.0_f64).powi(-(j as i32));
        let attach = ((t / step).round() as usize).clamp(1, n);
        if !used.insert(attach) {
            continue;
        }
        let chord_len = (attach as f64 * step) * std::f64::consts::SQRT_2;
        let segs = ((chord_len / h).round() as usize).max(1);
        let cstep = chord_len / segs as f64;
        let mut prev = ys[attach];
        for i in 1..segs {
            let v = b.vertex(format!("d{attach}_{i}"), None);
            b.edge(prev, v, cstep);
            prev = v;
        }
        b.edge(prev, xs[attach], cstep);
    }
    b.landmark("origin", origin);
    b.finish_length_measure(step, None)
}

/// Circle of circumference 2*pi with a ray attached at `attach`; the
/// `antipode` landmark sits exactly half the circumference away.
fn circle_plus_ray(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let h = positive(spec, "h", 0.01)?;
    let ray = positive(spec, "ray", 2.0 * std::f64::consts::PI)?;
    let circumference = 2.0 * std::f64::consts::PI;
    let mut n = ((circumference / h).round() as usize).max(4);
    n += n % 2;
    let step = circumference / n as f64;
    let mut b = Builder::new();
    let verts: Vec<usize> = (0..n).map(|i| b.vertex(format!("c{i}"), None)).collect();
    for i in 0..n {
        b.edge(verts[i], verts[(i + 1) % n], step);
    }
    let segs = ((ray / h).round() as usize).max(1);
    let rstep = ray / segs as f64;
    let mut prev = verts[0];
    for i in 1..=segs {
        let v = b.vertex(format!("r{i}"), None);
        b.edge(prev, v, rstep);
        prev = v;
    }
    b.landmark("attach", verts[0]);
    b.landmark("antipode", verts[n / 2]);
    b.finish_length_measure(step, None)
}

/// King-lattice square lobe of side `side`: vertices keyed by integer
/// coordinates, axis edges of length h, diagonal edges of length h*sqrt(2),
/// all weights equal to the cell area h^2. Returns the vertex grid.
fn lobe(b: &mut Builder, prefix: &str, cells: usize, h: f64) -> Vec<Vec<usize>> {
    let diag = h * std::f64::consts::SQRT_2;
    let grid: Vec<Vec<usize>> = (0..=cells)
        .map(|i| {
            (0..=cells)
                .map(|j| b.vertex(format!("{prefix}_{i}_{j}"), None))
                .collect()
        })
        .collect();
    for i in 0..=cells {
        for j in 0..=cells {
            b.set_weight(grid[i][j], h * h);
            if i < cells {
                b.edge(grid[i][j], grid[i + 1][j], h);
            }
            if j < cells {
                b.edge(grid[i][j], grid[i][j + 1], h);
            }
            if i < cells && j < cells {
                b.edge(grid[i][j], grid[i + 1][j + 1], diag);
                b.edge(grid[i + 1][j], grid[i][j + 1], diag);
            }
        }
    }
    grid
}

/// Three square lobes of side `side` joined to a central vertex by one
/// corridor edge each (length h, entering mid-side).
fn three_pronged(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let h = positive(spec, "h", 0.1)?;
    let side = positive(spec, "side", 8.0)?;
    let cells = ((side / h).round() as usize).max(2);
    let cells = cells + cells % 2;
    let mut b = Builder::new();
    let center = b.vertex("o".into(), None);
    b.set_weight(center, h * h);
    for prefix in ["A", "B", "C"] {
        let grid = lobe(&mut b, prefix, cells, h);
        b.edge(center, grid[0][cells / 2], h);
    }
    b.landmark("center", center);
    b.finish_weighted(h, None)
}

/// Planar double cusp {(x, y) : |x| <= |y|^alpha, |y| <= l} on a king
/// lattice. Column j (y = j*h) carries the exact area of its width profile
/// slab, split evenly over its vertices, so ball measures around the origin
/// follow the continuum power law r^(alpha+1).
fn cusp(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let alpha = positive(spec, "alpha", 3.0)?;
    if alpha < 1.0 {
        return Err(MmError::Parameter(format!("cusp: alpha must be >= 1, got {alpha}")));
    }
    let l = positive(spec, "l", 1.0)?;
    let h = positive(spec, "h", 1.0 / 64.0)?;
    let levels = ((l / h).round() as i64).max(2);
    let diag = h * std::f64::consts::SQRT_2;
    let mut b = Builder::new();
    // slab area between heights (|j|-1/2)h and (|j|+1/2)h for width 2|y|^alpha
    let slab = |j: i64| -> f64 {
        let a = alpha + 1.0;
        if j == 0 {
            2.0 * 2.0 / a * (0.5 * h).powf(a)
        } else {
            let lo = (j.abs() as f64 - 0.5) * h;
            let hi = (j.abs() as f64 + 0.5) * h;
            2.0 / a * (hi.powf(a) - lo.powf(a))
        }
    };
    let half_width = |j: i64| -> i64 { ((j.abs() as f64 * h).powf(alpha) / h).floor() as i64 };
    let mut columns: Vec<(i64, Vec<usize>)> = Vec::new();
    for j in -levels..=levels {
        let c = half_width(j);
        let verts: Vec<usize> = (-c..=c)
            .map(|i| b.vertex(format!("u{j}_{i}"), None))
            .collect();
        let w = slab(j) / verts.len() as f64;
        for &v in &verts {
            b.set_weight(v, w);
        }
        for t in 1..verts.len() {
            b.edge(verts[t - 1], verts[t], h);
        }
        columns.push((j, verts));
    }
    for t in 1..columns.len() {
        let (ja, ref va) = columns[t - 1];
        let (_, ref vb) = columns[t];
        let ca = half_width(ja);
        let cb = half_width(columns[t].0);
        for (off_a, &a) in (-ca..=ca).zip(va.iter()) {
            for off_b in (off_a - 1)..=(off_a + 1) {
                if off_b < -cb || off_b > cb {
                    continue;
                }
                let bvert = vb[(off_b + cb) as usize];
                let len = if off_b == off_a { h } else { diag };
                b.edge(a, bvert, len);
            }
        }
    }
    let origin = b.index["u0_0"];
    b.landmark("origin", origin);
    b.finish_weighted(h, None)
}

/// Unit-square king lattice with cell-area weights.
fn grid(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let l = positive(spec, "l", 1.0)?;
    let h = positive(spec, "h", 1.0 / 64.0)?;
    let cells = ((l / h).round() as usize).max(2);
    let cells = cells + cells % 2;
    let step = l / cells as f64;
    let mut b = Builder::new();
    let g = lobe(&mut b, "g", cells, step);
    b.landmark("center", g[cells / 2][cells / 2]);
    b.finish_weighted(step, None)
}

/// Segment [0, 2] with vertical teeth of height 1/i at x = 2/i.
fn ladder_teeth(spec: &ZooSpec) -> Result<DiscreteSpace> {
    let m = count(spec, "m", 6.0, 40)?;
    let h = positive(spec, "h", 0.01)?;
    let n = ((2.0 / h).round() as usize).max(2);
    let step = 2.0 / n as f64;
    let mut b = Builder::new();
    let xs: Vec<usize> = (0..=n).map(|i| b.vertex(format!("x{i}"), None)).collect();
    for i in 0..n {
        b.edge(xs[i], xs[i + 1], step);
    }
    let mut used = std::collections::HashSet::new();
    for i in 1..=m {
        let attach = ((2.0 / i as f64) / step).round() as usize;
        let attach = attach.clamp(1, n);
        if !used.insert(attach) {
            continue;
        }
        let height = 1.0 / i as f64;
        let segs = ((height / h).round() as usize).max(1);
        let tstep = height / segs as f64;
        let mut prev = xs[attach];
        for t in 1..=segs {
            let v = b.vertex(format!("t{i}_{t}"), None);
            b.edge(prev, v, tstep);
            prev = v;
        }
        b.landmark(&format!("tooth{i}"), prev);
    }
    b.landmark("origin", xs[0]);
    b.finish_length_measure(step, None)
}

pub use crate::io::{load, save};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parse_and_display() {
        let s = ZooSpec::parse("star?d=4&l=2").unwrap();
        assert_eq!(s.family, "star");
        assert_eq!(s.params["d"], 4.0);
        assert_eq!(s.to_string(), "star?d=4&l=2");
        assert!(ZooSpec::parse("star?d").is_err());
    }

    #[test]
    fn interval_measure_and_size() {
        let s = generate(&ZooSpec::parse("interval?h=0.001").unwrap()).unwrap();
        assert_eq!(s.len(), 1001);
        assert!((s.total_measure() - 1.0).abs() < 1e-9);
        let left = s.resolve("left").unwrap();
        let right = s.resolve("right").unwrap();
        assert!((s.distance(left, right) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cycle_antipode_distance() {
        let s = generate(&ZooSpec::parse("cycle?l=2&h=0.01").unwrap()).unwrap();
        let a = s.resolve("base").unwrap();
        let b = s.resolve("antipode").unwrap();
        assert!((s.distance(a, b) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn star_center_has_d_neighbors() {
        let s = generate(&ZooSpec::parse("star?d=4&h=0.05").unwrap()).unwrap();
        let c = s.resolve("center").unwrap();
        assert_eq!(s.neighbors(c).len(), 4);
        assert!((s.total_measure() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn circle_plus_ray_antipode_is_pi_away() {
        let s = generate(&ZooSpec::parse("circle_plus_ray?h=0.01").unwrap()).unwrap();
        let attach = s.resolve("attach").unwrap();
        let anti = s.resolve("antipode").unwrap();
        assert!((s.distance(attach, anti) - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn grid_total_area() {
        let s = generate(&ZooSpec::parse("grid?h=0.125").unwrap()).unwrap();
        // (cells+1)^2 cells of area step^2 slightly overcount the unit square
        let cells = 8.0;
        let expected = (cells + 1.0) * (cells + 1.0) / (cells * cells);
        assert!((s.total_measure() - expected).abs() < 1e-9);
    }

    #[test]
    fn cusp_ball_measure_power_law() {
        let s = generate(&ZooSpec::parse("cusp?alpha=3&h=0.015625").unwrap()).unwrap();
        let o = s.resolve("origin").unwrap();
        let row = s.row(o);
        for &r in &[0.25, 0.5] {
            let measured: f64 = (0..s.len())
                .filter(|&v| row[v] <= r)
                .map(|v| s.weight(v))
                .sum();
            let expected = 4.0 / 4.0 * r.powi(4); // 2 sides * 2/(alpha+1) * r^(alpha+1)
            assert!(
                (measured / expected - 1.0).abs() < 0.35,
                "r={r}: measured {measured}, expected {expected}"
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&ZooSpec::parse("tangent_circles?m=2&h=0.05").unwrap()).unwrap();
        let b = generate(&ZooSpec::parse("tangent_circles?m=2&h=0.05").unwrap()).unwrap();
        assert_eq!(crate::io::to_json(&a), crate::io::to_json(&b));
    }

    #[test]
    fn small_spaces_have_small_length_defect() {
        for spec in ["interval?h=0.05", "cycle?l=1&h=0.05", "star?d=3&h=0.1&l=0.5"] {
            let s = generate(&ZooSpec::parse(spec).unwrap()).unwrap();
            assert!(
                s.length_space_defect() <= s.mesh() + 1e-9,
                "{spec}: defect {}",
                s.length_space_defect()
            );
        }
    }
}
