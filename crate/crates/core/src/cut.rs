//! Local cut points: degree estimation, r-cut verdicts, ends, branch and
//! weak-branch classification, sphere-cap diameter checks, and collinearity
//! of nearby cut points.
//!
//! All component counts use the far-reaching filter: a component of
//! `closed_ball(x, r) \ {x}` counts only if it contains a vertex at distance
//! at least r/2 from x. This suppresses dangling mesh stubs and is the
//! stable discrete reading of "number of components near x".

use serde::{Deserialize, Serialize};

use crate::error::{MmError, Result};
use crate::space::{components, region, DiscreteSpace, Region, RegionKind, VertexIdx};
use crate::volumes::delta_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutVerdict {
    Pass,
    /// the punctured ball is connected
    FailDisconnect,
    /// component count does not match the degree estimate
    FailCount,
    /// some component misses the r-sphere
    FailSphere,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CutProfile {
    pub point: String,
    pub radii: Vec<f64>,
    /// far-reaching component count of the punctured closed ball, per radius
    pub counts: Vec<usize>,
    pub degree_estimate: usize,
    pub is_local_cut: bool,
    pub r_cut_verdicts: Vec<(f64, CutVerdict)>,
}

/// Far-reaching components of `closed_ball(x, r) \ {x}`.
pub fn far_components(space: &DiscreteSpace, x: VertexIdx, r: f64) -> Result<Vec<Region>> {
    let ball = region(space, RegionKind::ClosedBall, x, r, 0.0)?;
    let row = space.row(x);
    Ok(components(space, &ball, &[x])
        .into_iter()
        .filter(|c| c.members.iter().any(|&v| row[v] >= r / 2.0))
        .collect())
}

fn verdict_at(
    space: &DiscreteSpace,
    x: VertexIdx,
    r: f64,
    degree_estimate: usize,
) -> Result<CutVerdict> {
    let comps = far_components(space, x, r)?;
    if comps.len() <= 1 && degree_estimate <= 1 {
        return Ok(CutVerdict::FailDisconnect);
    }
    if comps.len() != degree_estimate {
        return Ok(CutVerdict::FailCount);
    }
    let row = space.row(x);
    let tau = space.tau();
    for c in &comps {
        if !c.members.iter().any(|&v| (row[v] - r).abs() <= tau) {
            return Ok(CutVerdict::FailSphere);
        }
    }
    Ok(CutVerdict::Pass)
}

/// Component counts and r-cut verdicts over a radius grid. Radii below 4h
/// are rejected as mesh artifacts.
pub fn cut_profile(space: &DiscreteSpace, x: VertexIdx, radius_grid: &[f64]) -> Result<CutProfile> {
    if space.neighbors(x).is_empty() {
        return Err(MmError::Parameter(format!("vertex `{}` is isolated", space.id(x))));
    }
    let floor = 4.0 * space.mesh();
    let mut radii: Vec<f64> = radius_grid.to_vec();
    radii.retain(|&r| r.is_finite());
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    if radii.is_empty() {
        return Err(MmError::Parameter("empty radius grid".into()));
    }
    if radii[0] < floor {
        return Err(MmError::Parameter(format!(
            "radius {} below mesh artifact floor {floor}",
            radii[0]
        )));
    }
    let counts: Vec<usize> = radii
        .iter()
        .map(|&r| far_components(space, x, r).map(|c| c.len()))
        .collect::<Result<_>>()?;
    let degree_estimate = counts.iter().copied().max().unwrap_or(0);
    let r_cut_verdicts = radii
        .iter()
        .map(|&r| Ok((r, verdict_at(space, x, r, degree_estimate)?)))
        .collect::<Result<_>>()?;
    Ok(CutProfile {
        point: space.id(x).to_string(),
        radii,
        counts,
        degree_estimate,
        is_local_cut: degree_estimate >= 2,
        r_cut_verdicts,
    })
}

fn default_degree_grid(space: &DiscreteSpace, r: f64) -> Vec<f64> {
    let floor = 4.0 * space.mesh();
    (1..=8)
        .map(|i| r * i as f64 / 8.0)
        .filter(|&s| s >= floor)
        .collect()
}

/// r-cut verdict at a single radius; the degree estimate is taken over a
/// default grid of radii up to r.
pub fn is_r_cut_point(space: &DiscreteSpace, x: VertexIdx, r: f64) -> Result<CutVerdict> {
    if r < 4.0 * space.mesh() {
        return Err(MmError::Parameter(format!(
            "radius {r} below mesh artifact floor {}",
            4.0 * space.mesh()
        )));
    }
    let grid = default_degree_grid(space, r);
    let profile = cut_profile(space, x, &grid)?;
    verdict_at(space, x, r, profile.degree_estimate)
}

/// Degree estimate over a default grid up to r.
pub fn degree_estimate(space: &DiscreteSpace, x: VertexIdx, r: f64) -> Result<usize> {
    let grid = default_degree_grid(space, r);
    Ok(cut_profile(space, x, &grid)?.degree_estimate)
}

/// Number of components of the complement of the open R-ball that reach
/// distance at least 2R from the base: the finite-scale surrogate for ends.
pub fn ends_at_scale(space: &DiscreteSpace, base: VertexIdx, r: f64) -> usize {
    let row = space.row(base);
    let guard = space.mesh() / 2.0;
    let complement: Vec<VertexIdx> =
        (0..space.len()).filter(|&v| row[v] >= r - guard).collect();
    if complement.is_empty() {
        return 0;
    }
    let reg = Region::from_members(space, RegionKind::Explicit, complement);
    components(space, &reg, &[])
        .into_iter()
        .filter(|c| c.members.iter().any(|&v| row[v] >= 2.0 * r))
        .count()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiamComponentReport {
    pub component_size: usize,
    pub cap_size: usize,
    pub diameter: f64,
    /// false when the diameter is a multi-sweep lower bound rather than an
    /// exhaustive pairwise maximum
    pub diameter_exact: bool,
    pub bound: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiamReport {
    pub point: String,
    pub r: f64,
    pub delta: f64,
    pub components: Vec<DiamComponentReport>,
    pub violation: bool,
}

fn cap_diameter(space: &DiscreteSpace, cap: &[VertexIdx]) -> (f64, bool) {
    if cap.len() < 2 {
        return (0.0, true);
    }
    if cap.len() <= 64 {
        let mut best: f64 = 0.0;
        for (i, &a) in cap.iter().enumerate() {
            let row = space.row(a);
            for &b in &cap[i + 1..] {
                best = best.max(row[b]);
            }
        }
        return (best, true);
    }
    // multi-sweep lower bound: hop to the farthest cap vertex repeatedly
    let mut cur = cap[0];
    let mut best: f64 = 0.0;
    for _ in 0..8 {
        let row = space.row(cur);
        let (far, d) = cap
            .iter()
            .map(|&v| (v, row[v]))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if d <= best {
            break;
        }
        best = d;
        cur = far;
    }
    (best, false)
}

/// Per-component diameter of the sphere cap `O ∩ sphere(x, r)` against the
/// bound `(2 - delta) r`. A reported violation is sound even when the
/// diameter is a lower bound.
pub fn diam_check(
    space: &DiscreteSpace,
    x: VertexIdx,
    r: f64,
    k: f64,
    n: f64,
    c: f64,
) -> Result<DiamReport> {
    let delta = delta_threshold(k, n, c, r)?;
    let comps = far_components(space, x, r)?;
    let row = space.row(x);
    let tau = space.tau();
    let bound = (2.0 - delta) * r;
    let mut out = Vec::new();
    for comp in &comps {
        let cap: Vec<VertexIdx> = comp
            .members
            .iter()
            .copied()
            .filter(|&v| (row[v] - r).abs() <= tau)
            .collect();
        let (diameter, diameter_exact) = cap_diameter(space, &cap);
        out.push(DiamComponentReport {
            component_size: comp.len(),
            cap_size: cap.len(),
            diameter,
            diameter_exact,
            bound,
            violation: diameter > bound,
        });
    }
    let violation = out.iter().any(|c| c.violation);
    Ok(DiamReport { point: space.id(x).to_string(), r, delta, components: out, violation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchVerdict {
    Branch,
    NotBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakBranchVerdict {
    WeakBranch,
    NotWeakBranch,
    Vacuous,
}

fn anchors_at(space: &DiscreteSpace, x: VertexIdx, l: f64, cap: usize) -> Vec<VertexIdx> {
    let row = space.row(x);
    let tau = space.tau();
    let mut picks: Vec<VertexIdx> =
        (0..space.len()).filter(|&v| (row[v] - l).abs() <= tau).collect();
    if picks.len() > cap {
        let stride = picks.len() / cap;
        picks = picks.into_iter().step_by(stride.max(1)).take(cap).collect();
    }
    picks
}

/// Branch test: x branches if, viewed from some anchor at distance l, every
/// scale eps in the grid contains two tau-equidistant continuations past x
/// that are more than 2*tau apart.
pub fn branch_point_test(
    space: &DiscreteSpace,
    x: VertexIdx,
    l: f64,
    eps_grid: &[f64],
) -> Result<BranchVerdict> {
    let anchors = anchors_at(space, x, l, 8);
    if anchors.is_empty() {
        return Err(MmError::Parameter(format!(
            "no vertex at distance {l} from `{}`",
            space.id(x)
        )));
    }
    let row_x = space.row(x);
    let tau = space.tau();
    for &g0 in &anchors {
        let row_g = space.row(g0);
        let all_scales = eps_grid.iter().all(|&eps| {
            let near: Vec<VertexIdx> = (0..space.len())
                .filter(|&v| v != x && row_x[v] <= eps && row_g[v] > l)
                .collect();
            near.iter().enumerate().any(|(i, &a)| {
                near[i + 1..].iter().any(|&b| {
                    (row_g[a] - row_g[b]).abs() <= tau && space.distance(a, b) > 2.0 * tau
                })
            })
        });
        if all_scales {
            return Ok(BranchVerdict::Branch);
        }
    }
    Ok(BranchVerdict::NotBranch)
}

/// Weak-branch test: for every pair of continuations past x within eps,
/// some vertex w witnesses a shared initial geodesic segment: w lies within
/// tau of geodesics from x to both pair members and sits at least halfway
/// out to the nearer member. The halfway floor keeps the tau-slack zone
/// right next to x from producing spurious witnesses.
///
/// Admissible continuations sit in the distance band (2 tau, eps] from x
/// and strictly beyond the anchor distance l.
pub fn weak_branch_test(
    space: &DiscreteSpace,
    x: VertexIdx,
    l: f64,
    eps: f64,
) -> Result<WeakBranchVerdict> {
    let anchors = anchors_at(space, x, l, 8);
    if anchors.is_empty() {
        return Err(MmError::Parameter(format!(
            "no vertex at distance {l} from `{}`",
            space.id(x)
        )));
    }
    let row_x = space.row(x);
    let tau = space.tau();
    let mut any_pair = false;
    for &g0 in &anchors {
        let row_g = space.row(g0);
        let near: Vec<VertexIdx> = (0..space.len())
            .filter(|&v| v != x && row_x[v] > 2.0 * tau && row_x[v] <= eps && row_g[v] > l)
            .collect();
        for (i, &a) in near.iter().enumerate() {
            let row_a = space.row(a);
            for &bv in &near[i + 1..] {
                if row_a[bv] <= tau {
                    continue;
                }
                any_pair = true;
                let row_b = space.row(bv);
                let floor = row_x[a].min(row_x[bv]) / 2.0;
                let shared = (0..space.len()).any(|w| {
                    row_x[w] >= floor
                        && row_x[w] + row_a[w] <= row_x[a] + tau
                        && row_x[w] + row_b[w] <= row_x[bv] + tau
                });
                if !shared {
                    return Ok(WeakBranchVerdict::NotWeakBranch);
                }
            }
        }
    }
    if any_pair {
        Ok(WeakBranchVerdict::WeakBranch)
    } else {
        Ok(WeakBranchVerdict::Vacuous)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineArrangement {
    /// relabeled triple: x1 sees the other two in one component
    pub x1: String,
    pub x2: String,
    pub x3: String,
    pub r: f64,
    pub stands_in_line: bool,
}

/// Collinearity of three r-cut points: after relabeling so that x2 and x3
/// share one component of the punctured ball at x1 (with x2 the nearer),
/// the outward components at x2 and x3 must overlap.
pub fn stands_in_line(
    space: &DiscreteSpace,
    a: VertexIdx,
    b: VertexIdx,
    c: VertexIdx,
    r: f64,
) -> Result<LineArrangement> {
    let triple = [a, b, c];
    for &x1 in &triple {
        let others: Vec<VertexIdx> = triple.iter().copied().filter(|&v| v != x1).collect();
        let comps1 = far_components(space, x1, r)?;
        let joint = comps1
            .iter()
            .find(|comp| others.iter().all(|&v| comp.contains(v)));
        let Some(_) = joint else { continue };
        let row1 = space.row(x1);
        let (x2, x3) = if row1[others[0]] <= row1[others[1]] {
            (others[0], others[1])
        } else {
            (others[1], others[0])
        };
        // outward component at xi: the far component not containing x1
        let outward = |xi: VertexIdx| -> Result<Option<Region>> {
            let comps = far_components(space, xi, r)?;
            if comps.len() != 2 {
                return Ok(None);
            }
            Ok(comps.into_iter().find(|comp| !comp.contains(x1)))
        };
        let o2 = outward(x2)?.ok_or_else(|| {
            MmError::LineConvention(format!(
                "`{}` does not split into exactly two components with one avoiding `{}`",
                space.id(x2),
                space.id(x1)
            ))
        })?;
        let o3 = outward(x3)?.ok_or_else(|| {
            MmError::LineConvention(format!(
                "`{}` does not split into exactly two components with one avoiding `{}`",
                space.id(x3),
                space.id(x1)
            ))
        })?;
        let overlap = o2.members.iter().any(|&v| o3.contains(v));
        return Ok(LineArrangement {
            x1: space.id(x1).to_string(),
            x2: space.id(x2).to_string(),
            x3: space.id(x3).to_string(),
            r,
            stands_in_line: overlap,
        });
    }
    Err(MmError::LineConvention(
        "no labeling places the other two points in a single component".into(),
    ))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccumulationReport {
    pub r: f64,
    pub gate: f64,
    pub cut_points: Vec<String>,
    pub triples_checked: usize,
    pub line_violations: Vec<(String, String, String)>,
    pub high_degree_points: Vec<(String, usize)>,
}

/// Enumerates all r-cut vertices, then checks every chain of nearby ones
/// (consecutive points within the proximity gate) for collinearity and
/// degree 2. Quadratic in vertex count; desk-scale spaces only.
pub fn cut_set_accumulation_check(space: &DiscreteSpace, r: f64) -> Result<AccumulationReport> {
    let delta = delta_threshold(0.0, 2.0, 1.0, r).expect("flat threshold parameters are valid");
    let gate = (delta * r / 6.0).max(4.0 * space.mesh());
    let mut cut_points: Vec<VertexIdx> = Vec::new();
    for v in 0..space.len() {
        if space.neighbors(v).is_empty() {
            continue;
        }
        if is_r_cut_point(space, v, r)? == CutVerdict::Pass {
            cut_points.push(v);
        }
    }
    let mut high_degree_points = Vec::new();
    for &v in &cut_points {
        let d = degree_estimate(space, v, r)?;
        if d > 2 {
            high_degree_points.push((space.id(v).to_string(), d));
        }
    }
    // chains: connect cut points within the gate, order each chain by
    // distance from its first member, check consecutive triples
    let m = cut_points.len();
    let mut assigned = vec![false; m];
    let mut triples_checked = 0;
    let mut line_violations = Vec::new();
    for start in 0..m {
        if assigned[start] {
            continue;
        }
        let mut chain = vec![start];
        assigned[start] = true;
        let mut frontier = vec![start];
        while let Some(i) = frontier.pop() {
            for j in 0..m {
                if !assigned[j]
                    && space.distance(cut_points[i], cut_points[j]) < gate
                {
                    assigned[j] = true;
                    chain.push(j);
                    frontier.push(j);
                }
            }
        }
        if chain.len() < 3 {
            continue;
        }
        let anchor = cut_points[chain[0]];
        let row = space.row(anchor);
        chain.sort_by(|&i, &j| {
            row[cut_points[i]].partial_cmp(&row[cut_points[j]]).unwrap()
        });
        for w in chain.windows(3) {
            let (a, b, c) = (cut_points[w[0]], cut_points[w[1]], cut_points[w[2]]);
            triples_checked += 1;
            let in_line = match stands_in_line(space, a, b, c, r) {
                Ok(arr) => arr.stands_in_line,
                Err(MmError::LineConvention(_)) => false,
                Err(e) => return Err(e),
            };
            if !in_line {
                line_violations.push((
                    space.id(a).to_string(),
                    space.id(b).to_string(),
                    space.id(c).to_string(),
                ));
            }
        }
    }
    Ok(AccumulationReport {
        r,
        gate,
        cut_points: cut_points.iter().map(|&v| space.id(v).to_string()).collect(),
        triples_checked,
        line_violations,
        high_degree_points,
    })
}
