//! Directional volume-comparison checks.
//!
//! The inequality under test bounds mu(U) / mu(S) by C times the model
//! annulus-volume ratio, where S is the geodesic shadow of U seen from the
//! base point. "All measurable U" is unverifiable, so a sampling plan draws
//! from five adversarial set families; the per-component stub family around
//! detected cut points is the extremal one and is always included when
//! estimating the minimal constant.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cut;
use crate::error::{MmError, Result};
use crate::space::{
    components, geodesic_shadow, region, DiscreteSpace, Region, RegionKind, ShadowParams,
    VertexIdx,
};
use crate::volumes::volume;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BGReport {
    pub base: String,
    pub family: String,
    pub k: f64,
    pub n: f64,
    pub s1: f64,
    pub s2: f64,
    pub r1: f64,
    pub r2: f64,
    pub u_size: usize,
    pub u_measure: f64,
    pub shadow_size: usize,
    pub shadow_measure: f64,
    /// mu(U) / mu(shadow); infinite when the shadow is empty but U is not
    pub lhs: f64,
    /// model volume ratio V(r1,r2) / V(s1,s2)
    pub rhs_unit: f64,
    pub implied_c: f64,
    pub mesh_slack: f64,
    /// witness vertex ids of U, for reproduction
    pub u_members: Vec<String>,
}

impl BGReport {
    pub fn passes(&self, c: f64) -> bool {
        self.implied_c <= c * (1.0 + self.mesh_slack)
    }
}

fn mesh_slack(space: &DiscreteSpace, params: &ShadowParams) -> f64 {
    let win = (params.s2 - params.s1).min(params.r2 - params.r1);
    4.0 * space.mesh() / win
}

/// One check of the comparison inequality for an explicit set U.
pub fn bg_ratio(
    space: &DiscreteSpace,
    base: VertexIdx,
    u: &Region,
    params: &ShadowParams,
    k: f64,
    n: f64,
) -> Result<BGReport> {
    bg_ratio_tagged(space, base, u, params, k, n, "explicit")
}

fn bg_ratio_tagged(
    space: &DiscreteSpace,
    base: VertexIdx,
    u: &Region,
    params: &ShadowParams,
    k: f64,
    n: f64,
    family: &str,
) -> Result<BGReport> {
    let u_raw = u.raw_weight(space);
    if !(u_raw > 0.0) {
        return Err(MmError::Parameter("U has zero measure".into()));
    }
    let shadow = geodesic_shadow(space, base, u, params)?;
    let shadow_raw = shadow.raw_weight(space);
    // raw weights keep the ratio independent of the measure scale
    let lhs = if shadow_raw > 0.0 { u_raw / shadow_raw } else { f64::INFINITY };
    // the discrete annuli carry half-mesh guard bands; evaluating the
    // model volumes on the same shrunken windows removes the O(h) bias
    // that would otherwise inflate the implied constant at small radii
    let g = space.mesh() / 2.0;
    let shrink = |a: f64, b: f64| {
        if b - a > 4.0 * g { (a + g, b - g) } else { (a, b) }
    };
    let (r1m, r2m) = shrink(params.r1, params.r2);
    let (s1m, s2m) = shrink(params.s1, params.s2);
    let vr = volume(k, n, r1m, r2m)?.value;
    let vs = volume(k, n, s1m, s2m)?.value;
    let rhs_unit = vr / vs;
    let implied_c = lhs / rhs_unit;
    Ok(BGReport {
        base: space.id(base).to_string(),
        family: family.to_string(),
        k,
        n,
        s1: params.s1,
        s2: params.s2,
        r1: params.r1,
        r2: params.r2,
        u_size: u.len(),
        u_measure: u.measure,
        shadow_size: shadow.len(),
        shadow_measure: shadow.measure,
        lhs,
        rhs_unit,
        implied_c,
        mesh_slack: mesh_slack(space, params),
        u_members: u.members.iter().map(|&v| space.id(v).to_string()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetFamily {
    FullAnnulus,
    AnnulusComponents,
    BallCaps,
    RandomSubsets,
    CutStubs,
}

impl SetFamily {
    pub const ALL: [SetFamily; 5] = [
        SetFamily::FullAnnulus,
        SetFamily::AnnulusComponents,
        SetFamily::BallCaps,
        SetFamily::RandomSubsets,
        SetFamily::CutStubs,
    ];

    fn name(self) -> &'static str {
        match self {
            SetFamily::FullAnnulus => "full_annulus",
            SetFamily::AnnulusComponents => "annulus_components",
            SetFamily::BallCaps => "ball_caps",
            SetFamily::RandomSubsets => "random_subsets",
            SetFamily::CutStubs => "cut_stubs",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SamplingPlan {
    pub seed: u64,
    pub radii: Vec<f64>,
    pub base_samples: usize,
    pub families: Vec<SetFamily>,
    pub subsets_per_config: usize,
}

impl SamplingPlan {
    /// Radius grid spanning mesh-safe scales up to roughly half the
    /// diameter, all five families, a handful of sampled bases.
    pub fn standard(space: &DiscreteSpace, seed: u64) -> SamplingPlan {
        let some_vertex = 0;
        let reach = space.eccentricity(some_vertex);
        let r_max = reach / 2.0;
        let r_min = 24.0 * space.mesh();
        let mut radii = Vec::new();
        let mut r = r_max;
        while r >= r_min && radii.len() < 6 {
            radii.push(r);
            r /= 2.0;
        }
        if radii.is_empty() {
            radii.push(r_max.max(r_min));
        }
        SamplingPlan {
            seed,
            radii,
            base_samples: 6,
            families: SetFamily::ALL.to_vec(),
            subsets_per_config: 3,
        }
    }

    pub fn with_families(mut self, families: &[SetFamily]) -> SamplingPlan {
        self.families = families.to_vec();
        self
    }
}

fn sample_bases(space: &DiscreteSpace, plan: &SamplingPlan) -> Vec<VertexIdx> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut bases: Vec<VertexIdx> = space
        .meta
        .values()
        .filter_map(|id| space.index_of(id).ok())
        .collect();
    let mut rest: Vec<VertexIdx> = (0..space.len()).collect();
    rest.shuffle(&mut rng);
    for v in rest.into_iter().take(plan.base_samples) {
        bases.push(v);
    }
    bases.sort_unstable();
    bases.dedup();
    bases
}

fn annulus_configs(r: f64) -> (ShadowParams, f64, f64) {
    // U lives in (r/2, r), shadows are read in (r/4, r/2)
    let params = ShadowParams {
        s1: r / 4.0,
        s2: r / 2.0,
        r1: r / 2.0,
        r2: r,
        tau: 0.0,
    };
    (params, r / 2.0, r)
}

fn run_family(
    space: &DiscreteSpace,
    family: SetFamily,
    plan: &SamplingPlan,
    k: f64,
    n: f64,
    out: &mut Vec<BGReport>,
) -> Result<()> {
    let bases = sample_bases(space, plan);
    let tau = space.tau();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed.wrapping_add(family as u64 + 1));
    match family {
        SetFamily::FullAnnulus | SetFamily::AnnulusComponents | SetFamily::BallCaps
        | SetFamily::RandomSubsets => {
            for &base in &bases {
                for &r in &plan.radii {
                    let (mut params, r1, r2) = annulus_configs(r);
                    params.tau = tau;
                    if params.s2 - params.s1 < 4.0 * space.mesh() {
                        continue;
                    }
                    let annulus = region(space, RegionKind::Annulus, base, r1, r2)?;
                    if annulus.is_empty() {
                        continue;
                    }
                    let sets: Vec<Region> = match family {
                        SetFamily::FullAnnulus => vec![annulus],
                        SetFamily::AnnulusComponents => components(space, &annulus, &[]),
                        SetFamily::BallCaps => {
                            let row = space.row(base);
                            let outer: Vec<VertexIdx> = annulus
                                .members
                                .iter()
                                .copied()
                                .filter(|&v| (row[v] - r).abs() <= r / 8.0 + tau)
                                .collect();
                            let mut sets = Vec::new();
                            for _ in 0..plan.subsets_per_config {
                                if outer.is_empty() {
                                    break;
                                }
                                let w = outer[rng.gen_range(0..outer.len())];
                                let row_w = space.row(w);
                                let cap: Vec<VertexIdx> = annulus
                                    .members
                                    .iter()
                                    .copied()
                                    .filter(|&v| row_w[v] <= r / 4.0)
                                    .collect();
                                if !cap.is_empty() {
                                    sets.push(Region::from_members(
                                        space,
                                        RegionKind::Explicit,
                                        cap,
                                    ));
                                }
                            }
                            sets
                        }
                        SetFamily::RandomSubsets => {
                            let mut sets = Vec::new();
                            for _ in 0..plan.subsets_per_config {
                                let picked: Vec<VertexIdx> = annulus
                                    .members
                                    .iter()
                                    .copied()
                                    .filter(|_| rng.gen_bool(0.5))
                                    .collect();
                                if !picked.is_empty() {
                                    sets.push(Region::from_members(
                                        space,
                                        RegionKind::Explicit,
                                        picked,
                                    ));
                                }
                            }
                            sets
                        }
                        _ => unreachable!(),
                    };
                    for u in sets {
                        if u.raw_weight(space) > 0.0 {
                            out.push(bg_ratio_tagged(
                                space,
                                base,
                                &u,
                                &params,
                                k,
                                n,
                                family.name(),
                            )?);
                        }
                    }
                }
            }
        }
        SetFamily::CutStubs => {
            for &c in &bases {
                for &r in &plan.radii {
                    if r < 4.0 * space.mesh() {
                        continue;
                    }
                    let comps = cut::far_components(space, c, r)?;
                    if comps.len() < 2 {
                        continue;
                    }
                    stub_reports(space, c, r, &comps, k, n, out)?;
                }
            }
        }
    }
    Ok(())
}

/// The extremal construction: from a base x at distance l inside one
/// component of the punctured ball around a cut point c, take U to be the
/// far side of c (everything in the other components within eps of c).
/// Shadows of U from x collapse into x's own component.
fn stub_reports(
    space: &DiscreteSpace,
    c: VertexIdx,
    r: f64,
    comps: &[Region],
    k: f64,
    n: f64,
    out: &mut Vec<BGReport>,
) -> Result<()> {
    let h = space.mesh();
    let tau = space.tau();
    let eps = 10.0 * h;
    let l = (20.0 * h).max(r / 4.0);
    let row_c = space.row(c);
    for (j, home) in comps.iter().enumerate() {
        // base: the vertex of this component closest to distance l from c
        let Some(&x) = home
            .members
            .iter()
            .min_by(|&&a, &&b| {
                (row_c[a] - l).abs().partial_cmp(&(row_c[b] - l).abs()).unwrap()
            })
        else {
            continue;
        };
        let lx = row_c[x];
        if (lx - l).abs() > tau || lx <= eps {
            continue;
        }
        let row_x = space.row(x);
        // U fills the annulus (lx, lx + eps) around x restricted to the
        // other components; the shadow window mirrors it at (lx - eps, lx).
        // Matching open windows keep the two guard bands symmetric, so the
        // discrete ratio tracks the continuum one.
        let guard = h / 2.0;
        let mut stub: Vec<VertexIdx> = Vec::new();
        for (i, other) in comps.iter().enumerate() {
            if i == j {
                continue;
            }
            stub.extend(other.members.iter().copied().filter(|&z| {
                row_x[z] > lx + guard && row_x[z] < lx + eps - guard
            }));
        }
        if stub.is_empty() {
            continue;
        }
        let u = Region::from_members(space, RegionKind::Explicit, stub);
        let params = ShadowParams::new(lx - eps, lx, lx, lx + eps, tau)?;
        if u.raw_weight(space) > 0.0 {
            out.push(bg_ratio_tagged(space, x, &u, &params, k, n, "cut_stubs")?);
        }
    }
    Ok(())
}

/// Sampled configurations violating the inequality at constant C beyond
/// their declared mesh slack. Empty output means "no violation found".
pub fn check_bg(
    space: &DiscreteSpace,
    k: f64,
    n: f64,
    c: f64,
    plan: &SamplingPlan,
) -> Result<Vec<BGReport>> {
    let mut reports = Vec::new();
    for &family in &plan.families {
        run_family(space, family, plan, k, n, &mut reports)?;
    }
    reports.retain(|rep| !rep.passes(c));
    Ok(reports)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinCEstimate {
    pub value: f64,
    pub mesh_slack: f64,
    pub worst: Option<BGReport>,
}

/// Largest implied constant over the plan; the stub family is always
/// included so detected cut points contribute their extremal sets.
pub fn estimate_min_c(
    space: &DiscreteSpace,
    k: f64,
    n: f64,
    plan: &SamplingPlan,
) -> Result<MinCEstimate> {
    let mut families = plan.families.clone();
    if !families.contains(&SetFamily::CutStubs) {
        families.push(SetFamily::CutStubs);
    }
    let mut reports = Vec::new();
    for &family in &families {
        run_family(space, family, plan, k, n, &mut reports)?;
    }
    let worst = reports
        .into_iter()
        .filter(|r| r.implied_c.is_finite())
        .max_by(|a, b| a.implied_c.partial_cmp(&b.implied_c).unwrap());
    match worst {
        Some(w) => Ok(MinCEstimate { value: w.implied_c, mesh_slack: w.mesh_slack, worst: Some(w) }),
        None => Ok(MinCEstimate { value: 0.0, mesh_slack: 0.0, worst: None }),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallRatioReport {
    pub base: String,
    pub r: f64,
    pub big_r: f64,
    pub lhs: f64,
    pub rhs_unit: f64,
    pub implied_c: f64,
    pub mesh_slack: f64,
}

/// Ball-ratio form of the comparison: mu(B_R) / mu(B_r) against
/// C * V(0,R) / V(0,r), over sampled bases and radius pairs.
pub fn check_usual_bg(
    space: &DiscreteSpace,
    k: f64,
    n: f64,
    c: f64,
    plan: &SamplingPlan,
) -> Result<Vec<BallRatioReport>> {
    let bases = sample_bases(space, plan);
    let mut out = Vec::new();
    for &base in &bases {
        for (i, &r) in plan.radii.iter().enumerate() {
            for &big_r in &plan.radii[..i] {
                let (small, large) = if r < big_r { (r, big_r) } else { (big_r, r) };
                if small < 4.0 * space.mesh() || small == large {
                    continue;
                }
                let br = region(space, RegionKind::ClosedBall, base, small, 0.0)?;
                let bl = region(space, RegionKind::ClosedBall, base, large, 0.0)?;
                let small_raw = br.raw_weight(space);
                if !(small_raw > 0.0) {
                    continue;
                }
                let lhs = bl.raw_weight(space) / small_raw;
                let rhs_unit =
                    volume(k, n, 0.0, large)?.value / volume(k, n, 0.0, small)?.value;
                let slack = 4.0 * space.mesh() / small;
                let implied_c = lhs / rhs_unit;
                if implied_c > c * (1.0 + slack) {
                    out.push(BallRatioReport {
                        base: space.id(base).to_string(),
                        r: small,
                        big_r: large,
                        lhs,
                        rhs_unit,
                        implied_c,
                        mesh_slack: slack,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Largest sampled ratio mu(B_2r) / mu(B_r) over bases and r <= R/2.
pub fn doubling_estimate(space: &DiscreteSpace, r_cap: f64, plan: &SamplingPlan) -> Result<f64> {
    let bases = sample_bases(space, plan);
    let mut worst: f64 = 1.0;
    for &base in &bases {
        for &r in &plan.radii {
            if r > r_cap / 2.0 || r < 4.0 * space.mesh() {
                continue;
            }
            let small = region(space, RegionKind::ClosedBall, base, r, 0.0)?;
            let big = region(space, RegionKind::ClosedBall, base, 2.0 * r, 0.0)?;
            let sr = small.raw_weight(space);
            if sr > 0.0 {
                worst = worst.max(big.raw_weight(space) / sr);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{generate, ZooSpec};

    fn zoo(text: &str) -> DiscreteSpace {
        generate(&ZooSpec::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn interval_full_annulus_ratio_is_one() {
        let s = zoo("interval?h=0.002");
        let base = s.resolve("left").unwrap();
        let annulus = region(&s, RegionKind::Annulus, base, 0.5, 0.6).unwrap();
        let params = ShadowParams::new(0.3, 0.4, 0.5, 0.6, s.tau()).unwrap();
        let rep = bg_ratio(&s, base, &annulus, &params, 0.0, 1.0).unwrap();
        assert!((rep.rhs_unit - 1.0).abs() < 1e-12);
        assert!((rep.implied_c - 1.0).abs() < 0.05, "implied {}", rep.implied_c);
    }

    #[test]
    fn tripod_stub_needs_constant_two() {
        let s = zoo("star?d=3&h=0.002&l=1");
        let plan = SamplingPlan {
            seed: 7,
            radii: vec![0.4],
            base_samples: 0,
            families: vec![SetFamily::CutStubs],
            subsets_per_config: 0,
        };
        let est = estimate_min_c(&s, 0.0, 1.0, &plan).unwrap();
        assert!(
            (est.value - 2.0).abs() < 0.1,
            "tripod stub estimate {}",
            est.value
        );
    }

    #[test]
    fn interval_min_c_is_near_one() {
        let s = zoo("interval?h=0.002");
        let plan = SamplingPlan::standard(&s, 11);
        let est = estimate_min_c(&s, 0.0, 1.0, &plan).unwrap();
        assert!(est.value >= 0.95 && est.value <= 1.05, "estimate {}", est.value);
    }

    #[test]
    fn interval_passes_and_tripod_fails_at_one_and_a_half() {
        let interval = zoo("interval?h=0.002");
        let plan = SamplingPlan::standard(&interval, 3);
        assert!(check_bg(&interval, 0.0, 1.0, 1.05, &plan).unwrap().is_empty());

        // stub windows are 10h wide, so the declared slack is 0.4; the
        // implied constant 2 only beats C * 1.4 for C below 10/7
        let tripod = zoo("star?d=3&h=0.002&l=1");
        let plan = SamplingPlan::standard(&tripod, 3);
        let violations = check_bg(&tripod, 0.0, 1.0, 1.3, &plan).unwrap();
        assert!(violations.iter().any(|r| r.family == "cut_stubs"));
    }

    #[test]
    fn off_center_ball_ratio_violation_on_tripod() {
        let s = zoo("star?d=3&h=0.002&l=1");
        let plan = SamplingPlan::standard(&s, 5);
        // center-based balls are fine, off-center bases past the center see
        // ball volume grow three rays at once
        let violations = check_usual_bg(&s, 0.0, 1.0, 1.05, &plan).unwrap();
        assert!(!violations.is_empty());
    }

    #[test]
    fn doubling_on_interval_is_about_two() {
        let s = zoo("interval?h=0.002");
        let plan = SamplingPlan::standard(&s, 2);
        let d = doubling_estimate(&s, 0.4, &plan).unwrap();
        assert!(d <= 2.3, "doubling {d}");
    }
}
