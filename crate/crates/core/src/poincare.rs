//! Discrete upper gradients and mean-oscillation (Poincare-type) ratio
//! checks: local slopes, path-integral verification, best-constant
//! estimation over named function families, collar witness functions at
//! cut points, and ball-volume decay exponents.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MmError, Result};
use crate::space::{components, region, DiscreteSpace, Region, RegionKind, VertexIdx};

/// Function on vertices, indexed by vertex index.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientKind {
    LocalSlope,
    Supplied,
}

#[derive(Debug, Clone)]
pub struct GradientField {
    pub kind: GradientKind,
    pub values: Vec<f64>,
}

/// Max difference quotient over graph neighbors; zero at isolated vertices.
pub fn local_slope(space: &DiscreteSpace, u: &ScalarField) -> GradientField {
    let values = (0..space.len())
        .map(|v| {
            space
                .neighbors(v)
                .iter()
                .map(|&(w, len)| (u.values[v] - u.values[w]).abs() / len)
                .fold(0.0, f64::max)
        })
        .collect();
    GradientField { kind: GradientKind::LocalSlope, values }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathViolation {
    pub endpoints: (String, String),
    pub jump: f64,
    pub integral: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PathSample {
    pub seed: u64,
    pub shortest_pairs: usize,
    pub random_walks: usize,
    pub walk_steps: usize,
}

impl Default for PathSample {
    fn default() -> PathSample {
        PathSample { seed: 0, shortest_pairs: 40, random_walks: 40, walk_steps: 60 }
    }
}

fn path_integral(space: &DiscreteSpace, g: &GradientField, path: &[VertexIdx]) -> f64 {
    let mut total = 0.0;
    for w in path.windows(2) {
        let len = space
            .neighbors(w[0])
            .iter()
            .filter(|&&(v, _)| v == w[1])
            .map(|&(_, l)| l)
            .fold(f64::INFINITY, f64::min);
        // trapezoid on the edge endpoints
        total += len * (g.values[w[0]] + g.values[w[1]]) / 2.0;
    }
    total
}

/// Checks |u(end) - u(start)| <= path integral of g on sampled shortest
/// paths and random walks, with slack 2h * max g for endpoint rounding.
pub fn verify_upper_gradient(
    space: &DiscreteSpace,
    u: &ScalarField,
    g: &GradientField,
    sample: &PathSample,
) -> Vec<PathViolation> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample.seed);
    let gmax = g.values.iter().copied().fold(0.0, f64::max);
    let slack = 2.0 * space.mesh() * gmax;
    let mut paths: Vec<Vec<VertexIdx>> = Vec::new();
    for _ in 0..sample.shortest_pairs {
        let a = rng.gen_range(0..space.len());
        let b = rng.gen_range(0..space.len());
        if a != b {
            paths.push(space.shortest_path(a, b));
        }
    }
    for _ in 0..sample.random_walks {
        let mut v = rng.gen_range(0..space.len());
        let mut walk = vec![v];
        for _ in 0..sample.walk_steps {
            let nbrs = space.neighbors(v);
            if nbrs.is_empty() {
                break;
            }
            v = nbrs[rng.gen_range(0..nbrs.len())].0;
            walk.push(v);
        }
        paths.push(walk);
    }
    let mut out = Vec::new();
    for path in paths {
        if path.len() < 2 {
            continue;
        }
        let jump = (u.values[path[0]] - u.values[*path.last().unwrap()]).abs();
        let integral = path_integral(space, g, &path);
        if jump > integral + slack {
            out.push(PathViolation {
                endpoints: (
                    space.id(path[0]).to_string(),
                    space.id(*path.last().unwrap()).to_string(),
                ),
                jump,
                integral,
                slack,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareReport {
    pub center: String,
    pub r: f64,
    pub p: f64,
    pub function: String,
    pub ball_size: usize,
    /// measure-weighted mean of |u - mean(u)| over the ball
    pub lhs: f64,
    /// r times the p-mean of g over the ball
    pub rhs_unit: f64,
    pub implied_cp: f64,
}

/// Mean-oscillation ratio of (u, g) on the closed ball around x.
pub fn poincare_ratio(
    space: &DiscreteSpace,
    u: &ScalarField,
    g: &GradientField,
    x: VertexIdx,
    r: f64,
    p: f64,
) -> Result<PoincareReport> {
    if !(p >= 1.0) {
        return Err(MmError::Parameter(format!("p must be >= 1, got {p}")));
    }
    let ball = region(space, RegionKind::ClosedBall, x, r, 0.0)?;
    let measure: f64 = ball.measure;
    if !(measure > 0.0) {
        return Err(MmError::Parameter("ball has zero measure".into()));
    }
    let mean: f64 =
        ball.members.iter().map(|&v| space.weight(v) * u.values[v]).sum::<f64>() / measure;
    let lhs: f64 = ball
        .members
        .iter()
        .map(|&v| space.weight(v) * (u.values[v] - mean).abs())
        .sum::<f64>()
        / measure;
    let gp: f64 = ball
        .members
        .iter()
        .map(|&v| space.weight(v) * g.values[v].powf(p))
        .sum::<f64>()
        / measure;
    let rhs_unit = r * gp.powf(1.0 / p);
    // oscillation at the level of summation round-off counts as zero, so a
    // constant function with zero gradient does not report infinity
    let u_scale = ball.members.iter().map(|&v| u.values[v].abs()).fold(0.0, f64::max);
    let implied_cp = if rhs_unit > 0.0 {
        lhs / rhs_unit
    } else if lhs > 1e-12 * u_scale.max(1.0) {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(PoincareReport {
        center: space.id(x).to_string(),
        r,
        p,
        function: u.name.clone(),
        ball_size: ball.len(),
        lhs,
        rhs_unit,
        implied_cp,
    })
}

/// Witness function for the cut-point obstruction: on each side of a cut
/// point x the function climbs linearly at slope `n_slope` through a collar
/// of radius 1/(n_slope * mu(side)) and then plateaus at +-1/mu(side).
/// Its local slope concentrates on the collars.
pub fn cut_collar_witness(
    space: &DiscreteSpace,
    x: VertexIdx,
    r: f64,
    n_slope: f64,
) -> Result<(ScalarField, GradientField)> {
    if !(n_slope > 0.0) {
        return Err(MmError::Parameter(format!("slope must be positive, got {n_slope}")));
    }
    let ball = region(space, RegionKind::ClosedBall, x, r, 0.0)?;
    let row = space.row(x);
    let ball_comps: Vec<Region> = components(space, &ball, &[x])
        .into_iter()
        .filter(|c| c.members.iter().any(|&v| row[v] >= r / 2.0))
        .collect();
    if ball_comps.len() < 2 {
        return Err(MmError::NotCutPoint(space.id(x).to_string()));
    }
    // global sides: the plateau extends through the whole component of
    // X \ {x} so the function has no artificial jump at the ball boundary
    let everything = Region::from_members(space, RegionKind::Explicit, (0..space.len()).collect());
    let global = components(space, &everything, &[x]);
    let side_of = |v: VertexIdx| -> Option<usize> {
        global.iter().position(|c| c.contains(v))
    };
    let mut labels: Vec<Option<usize>> = vec![None; ball_comps.len()];
    for (i, comp) in ball_comps.iter().enumerate() {
        labels[i] = side_of(comp.members[0]);
    }
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            if labels[i].is_some() && labels[i] == labels[j] {
                return Err(MmError::Domain(
                    "ball components reconnect outside the ball; collar witness undefined".into(),
                ));
            }
        }
    }
    let mut values = vec![0.0; space.len()];
    for (i, comp) in ball_comps.iter().enumerate() {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mu = comp.measure;
        let plateau = 1.0 / mu;
        let members: &[VertexIdx] = match labels[i] {
            Some(g) => &global[g].members,
            None => &comp.members,
        };
        for &v in members {
            values[v] = sign * (n_slope * row[v]).min(plateau);
        }
    }
    let u = ScalarField { name: format!("collar_witness_slope_{n_slope}"), values };
    let g = local_slope(space, &u);
    Ok((u, g))
}

/// Least-squares fit of log mu(closed ball) against log r.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub residual: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn volume_decay_exponent(
    space: &DiscreteSpace,
    x: VertexIdx,
    radius_grid: &[f64],
) -> Result<DecayFit> {
    let floor = 4.0 * space.mesh();
    let row = space.row(x);
    let mut points = Vec::new();
    for &r in radius_grid {
        if r < floor {
            continue;
        }
        let mu: f64 = (0..space.len())
            .filter(|&v| row[v] <= r + space.mesh() / 2.0)
            .map(|v| space.weight(v))
            .sum();
        if mu > 0.0 {
            points.push((r.ln(), mu.ln()));
        }
    }
    if points.len() < 3 {
        return Err(MmError::Parameter(format!(
            "need at least 3 usable radii above {floor}, got {}",
            points.len()
        )));
    }
    let (slope, residual) = least_squares(&points);
    Ok(DecayFit { exponent: slope, residual, points })
}

/// Slope and root-mean-square residual of a least-squares line.
pub(crate) fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = points
        .iter()
        .map(|p| {
            let e = p.1 - (slope * p.0 + intercept);
            e * e
        })
        .sum();
    (slope, (rss / n).sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpEstimate {
    pub value: f64,
    pub best: Option<PoincareReport>,
}

pub const CP_FAMILIES: &[&str] = &["distance", "bump", "cut_witness"];

/// Largest mean-oscillation ratio over sampled configurations of the named
/// function families with g = local slope, balls of radius up to r_cap.
pub fn estimate_cp(
    space: &DiscreteSpace,
    p: f64,
    r_cap: f64,
    families: &[&str],
    seed: u64,
) -> Result<CpEstimate> {
    if families.is_empty() {
        return Err(MmError::Parameter("empty function family list".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<VertexIdx> = space
        .meta
        .values()
        .filter_map(|id| space.index_of(id).ok())
        .collect();
    let mut rest: Vec<VertexIdx> = (0..space.len()).collect();
    rest.shuffle(&mut rng);
    centers.extend(rest.into_iter().take(4));
    centers.sort_unstable();
    centers.dedup();
    let radii: Vec<f64> = [1.0, 0.5, 0.25]
        .iter()
        .map(|f| f * r_cap)
        .filter(|&r| r >= 8.0 * space.mesh())
        .collect();
    let mut best: Option<PoincareReport> = None;
    let consider = |rep: PoincareReport, best: &mut Option<PoincareReport>| {
        let better = match best {
            Some(b) => rep.implied_cp > b.implied_cp,
            None => true,
        };
        if better {
            *best = Some(rep);
        }
    };
    for family in families {
        match *family {
            "distance" | "bump" => {
                for &x0 in &centers {
                    let row = space.row(x0);
                    for &r in &radii {
                        let u = if *family == "distance" {
                            ScalarField {
                                name: format!("distance_from_{}", space.id(x0)),
                                values: row.to_vec(),
                            }
                        } else {
                            ScalarField {
                                name: format!("bump_at_{}", space.id(x0)),
                                values: row.iter().map(|&d| (1.0 - d / r).max(0.0)).collect(),
                            }
                        };
                        let g = local_slope(space, &u);
                        for &center in &centers {
                            let rep = poincare_ratio(space, &u, &g, center, r, p)?;
                            consider(rep, &mut best);
                        }
                    }
                }
            }
            "cut_witness" => {
                for &x in &centers {
                    for &r in &radii {
                        let ball = region(space, RegionKind::ClosedBall, x, r, 0.0)?;
                        let row = space.row(x);
                        let comps: Vec<Region> = components(space, &ball, &[x])
                            .into_iter()
                            .filter(|c| c.members.iter().any(|&v| row[v] >= r / 2.0))
                            .collect();
                        if comps.len() < 2 {
                            continue;
                        }
                        // slope chosen so collars span [6h, r/4]
                        let mu_min = comps
                            .iter()
                            .map(|c| c.measure)
                            .fold(f64::INFINITY, f64::min);
                        let n_max = 1.0 / (6.0 * space.mesh() * mu_min);
                        let n_min = 4.0 / (r * mu_min);
                        if n_max <= 0.0 {
                            continue;
                        }
                        let mut n_slope = n_max;
                        while n_slope >= n_min.min(n_max) {
                            match cut_collar_witness(space, x, r, n_slope) {
                                Ok((u, g)) => {
                                    let rep = poincare_ratio(space, &u, &g, x, r, p)?;
                                    consider(rep, &mut best);
                                }
                                Err(MmError::NotCutPoint(_)) | Err(MmError::Domain(_)) => break,
                                Err(e) => return Err(e),
                            }
                            if n_slope == n_min.min(n_max) {
                                break;
                            }
                            n_slope = (n_slope / 2.0).max(n_min.min(n_max));
                        }
                    }
                }
            }
            other => {
                return Err(MmError::Parameter(format!(
                    "unknown function family `{other}`; known: {}",
                    CP_FAMILIES.join(", ")
                )));
            }
        }
    }
    match best {
        Some(b) => Ok(CpEstimate { value: b.implied_cp, best: Some(b) }),
        None => Ok(CpEstimate { value: 0.0, best: None }),
    }
}
