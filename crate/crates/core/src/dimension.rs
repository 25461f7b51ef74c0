//! Scale analysis: separated sets, greedy covers, Hausdorff-type measure
//! and dimension estimates, Hausdorff distance between vertex sets, and
//! exact Gromov-Hausdorff bounds for small spaces via correspondence
//! search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MmError, Result};
use crate::poincare::least_squares;
use crate::space::{DiscreteSpace, Region, VertexIdx};
use crate::volumes::omega;

/// Greedy maximal set with pairwise distances >= eps; the scan order is a
/// seeded shuffle. Maximality makes the result an eps-net.
pub fn maximal_separated_set(space: &DiscreteSpace, eps: f64, seed: u64) -> Vec<VertexIdx> {
    let mut order: Vec<VertexIdx> = (0..space.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen: Vec<VertexIdx> = Vec::new();
    let mut nearest = vec![f64::INFINITY; space.len()];
    for v in order {
        if nearest[v] >= eps {
            let row = space.distance_to_set(&[v]);
            for w in 0..space.len() {
                nearest[w] = nearest[w].min(row[w]);
            }
            chosen.push(v);
        }
    }
    chosen
}

/// Size of a greedy cover by closed delta-balls: an upper bound on the true
/// covering number. Centers are chosen first-uncovered in index order.
pub fn covering_number(space: &DiscreteSpace, delta: f64) -> usize {
    greedy_cover(space, delta).len()
}

fn greedy_cover(space: &DiscreteSpace, delta: f64) -> Vec<VertexIdx> {
    let mut covered = vec![false; space.len()];
    let mut centers = Vec::new();
    for v in 0..space.len() {
        if covered[v] {
            continue;
        }
        centers.push(v);
        let row = space.distance_to_set(&[v]);
        for w in 0..space.len() {
            if row[w] <= delta {
                covered[w] = true;
            }
        }
    }
    centers
}

/// Upper bound on the s-dimensional measure at scale delta:
/// omega_s * sum over greedy cover elements of (diam/2)^s, with the
/// element diameter bounded by twice the largest center distance.
pub fn hausdorff_measure_estimate(space: &DiscreteSpace, s: f64, delta: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(MmError::Parameter(format!("s must be nonnegative, got {s}")));
    }
    let w = omega(s)?;
    let centers = greedy_cover(space, delta);
    let mut assigned = vec![usize::MAX; space.len()];
    let mut reach = vec![0.0_f64; centers.len()];
    for (ci, &c) in centers.iter().enumerate() {
        let row = space.distance_to_set(&[c]);
        for v in 0..space.len() {
            if assigned[v] == usize::MAX && row[v] <= delta {
                assigned[v] = ci;
                reach[ci] = reach[ci].max(row[v]);
            }
        }
    }
    Ok(w * reach.iter().map(|&r| r.powf(s)).sum::<f64>())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringProfile {
    pub scales: Vec<f64>,
    pub covering_numbers: Vec<usize>,
    pub separated_sizes: Vec<usize>,
    pub dimension: f64,
    pub residual: f64,
}

/// Box-counting dimension estimate: least-squares slope of log N(delta)
/// against log(1/delta) over the scale grid.
pub fn dimension_estimate(space: &DiscreteSpace, scale_grid: &[f64]) -> Result<CoveringProfile> {
    let floor = 2.0 * space.mesh();
    let mut scales: Vec<f64> = scale_grid.iter().copied().filter(|&d| d > floor).collect();
    scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scales.dedup();
    if scales.len() < 3 {
        return Err(MmError::Parameter(format!(
            "need at least 3 scales above {floor}, got {}",
            scales.len()
        )));
    }
    let covering_numbers: Vec<usize> =
        scales.iter().map(|&d| covering_number(space, d)).collect();
    let separated_sizes: Vec<usize> = scales
        .iter()
        .map(|&d| maximal_separated_set(space, d, 0).len())
        .collect();
    let points: Vec<(f64, f64)> = scales
        .iter()
        .zip(&covering_numbers)
        .map(|(&d, &n)| ((1.0 / d).ln(), (n as f64).ln()))
        .collect();
    let (dimension, residual) = least_squares(&points);
    Ok(CoveringProfile { scales, covering_numbers, separated_sizes, dimension, residual })
}

/// Hausdorff distance between two nonempty vertex sets of one space.
pub fn hausdorff_distance(space: &DiscreteSpace, a: &Region, b: &Region) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(MmError::Parameter("hausdorff distance needs nonempty sets".into()));
    }
    let to_b = space.distance_to_set(&b.members);
    let to_a = space.distance_to_set(&a.members);
    let d_ab = a.members.iter().map(|&v| to_b[v]).fold(0.0, f64::max);
    let d_ba = b.members.iter().map(|&v| to_a[v]).fold(0.0, f64::max);
    Ok(d_ab.max(d_ba))
}

fn metric_of(space: &DiscreteSpace) -> Vec<Vec<f64>> {
    (0..space.len()).map(|v| space.row(v).to_vec()).collect()
}

/// Exact distance bounds between two small spaces: half the minimal
/// distortion over all correspondences, found by branch-and-bound over
/// pairs of maps (X to Y, Y to X). Exact, so lower equals upper; errors
/// out when the search exceeds the node budget.
pub fn gh_distance_small(
    x: &DiscreteSpace,
    y: &DiscreteSpace,
    budget: usize,
) -> Result<(f64, f64)> {
    let dx = metric_of(x);
    let dy = metric_of(y);
    let d = min_correspondence_distortion(&dx, &dy, budget)? / 2.0;
    Ok((d, d))
}

/// Minimal distortion over correspondences between two finite metrics.
/// Every correspondence contains the graph of a map each way, and the
/// union of two such graphs is a correspondence, so searching map pairs is
/// exhaustive.
pub fn min_correspondence_distortion(
    dx: &[Vec<f64>],
    dy: &[Vec<f64>],
    budget: usize,
) -> Result<f64> {
    let n = dx.len();
    let m = dy.len();
    if n == 0 || m == 0 {
        return Err(MmError::Parameter("empty space in distortion search".into()));
    }
    struct Search<'a> {
        dx: &'a [Vec<f64>],
        dy: &'a [Vec<f64>],
        phi: Vec<usize>,
        psi: Vec<usize>,
        best: f64,
        nodes: usize,
        budget: usize,
    }
    impl Search<'_> {
        // distortion contribution of pairing (i, yi) against all already
        // fixed relation pairs
        fn pair_cost(&self, i: usize, yi: usize) -> f64 {
            let mut worst: f64 = 0.0;
            for (j, &yj) in self.phi.iter().enumerate() {
                worst = worst.max((self.dx[i][j] - self.dy[yi][yj]).abs());
            }
            for (j, &xj) in self.psi.iter().enumerate() {
                worst = worst.max((self.dx[i][xj] - self.dy[yi][j]).abs());
            }
            worst
        }

        fn go(&mut self, current: f64) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(MmError::BudgetExceeded(self.budget));
            }
            if current >= self.best {
                return Ok(());
            }
            let n = self.dx.len();
            let m = self.dy.len();
            if self.phi.len() < n {
                let i = self.phi.len();
                for yi in 0..m {
                    let cost = current.max(self.pair_cost(i, yi));
                    if cost < self.best {
                        self.phi.push(yi);
                        self.go(cost)?;
                        self.phi.pop();
                    }
                }
                return Ok(());
            }
            if self.psi.len() < m {
                let j = self.psi.len();
                for xj in 0..n {
                    // (xj, j) must respect both graphs laid down so far
                    let mut cost = current;
                    for (i, &yi) in self.phi.iter().enumerate() {
                        cost = cost.max((self.dx[xj][i] - self.dy[j][yi]).abs());
                    }
                    for (jj, &xjj) in self.psi.iter().enumerate() {
                        cost = cost.max((self.dx[xj][xjj] - self.dy[j][jj]).abs());
                    }
                    if cost < self.best {
                        self.psi.push(xj);
                        self.go(cost)?;
                        self.psi.pop();
                    }
                }
                return Ok(());
            }
            self.best = current;
            Ok(())
        }
    }
    // greedy seed keeps the branch-and-bound tight
    let mut seed_phi: Vec<usize> = Vec::new();
    for i in 0..n {
        let yi = (0..m)
            .min_by(|&a, &b| {
                let ca = seed_cost(dx, dy, &seed_phi, i, a);
                let cb = seed_cost(dx, dy, &seed_phi, i, b);
                ca.partial_cmp(&cb).unwrap()
            })
            .unwrap();
        seed_phi.push(yi);
    }
    // complete the map graph into a correspondence with nearest preimages,
    // then score the whole relation including cross terms
    let seed_psi: Vec<usize> = (0..m)
        .map(|j| {
            (0..n)
                .min_by(|&a, &b| {
                    let ca = (0..n)
                        .map(|i2| (dx[a][i2] - dy[j][seed_phi[i2]]).abs())
                        .fold(0.0f64, f64::max);
                    let cb = (0..n)
                        .map(|i2| (dx[b][i2] - dy[j][seed_phi[i2]]).abs())
                        .fold(0.0f64, f64::max);
                    ca.partial_cmp(&cb).unwrap()
                })
                .unwrap()
        })
        .collect();
    let relation: Vec<(usize, usize)> = seed_phi
        .iter()
        .enumerate()
        .map(|(i, &j)| (i, j))
        .chain(seed_psi.iter().enumerate().map(|(j, &i)| (i, j)))
        .collect();
    let mut seed_worst: f64 = 0.0;
    for &(i1, j1) in &relation {
        for &(i2, j2) in &relation {
            seed_worst = seed_worst.max((dx[i1][i2] - dy[j1][j2]).abs());
        }
    }
    let mut search = Search {
        dx,
        dy,
        phi: Vec::new(),
        psi: Vec::new(),
        best: seed_worst + 1e-12,
        nodes: 0,
        budget,
    };
    search.go(0.0)?;
    Ok(search.best)
}

fn seed_cost(dx: &[Vec<f64>], dy: &[Vec<f64>], phi: &[usize], i: usize, yi: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, &yj) in phi.iter().enumerate() {
        worst = worst.max((dx[i][j] - dy[yi][yj]).abs());
    }
    worst
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproximationVerdict {
    pub pass: bool,
    /// largest |d_X(a,b) - d_Y(phi a, phi b)| with its witnesses
    pub worst_distortion: (f64, String, String),
    /// largest distance from a Y vertex to the image, with its witness
    pub worst_gap: (f64, String),
}

/// Checks that phi distorts distances by less than eps and that its image
/// is eps-dense in the target.
pub fn check_epsilon_approximation(
    x: &DiscreteSpace,
    y: &DiscreteSpace,
    phi: &[VertexIdx],
    eps: f64,
) -> Result<ApproximationVerdict> {
    if phi.len() != x.len() {
        return Err(MmError::Parameter(format!(
            "map covers {} of {} vertices",
            phi.len(),
            x.len()
        )));
    }
    if let Some(&bad) = phi.iter().find(|&&v| v >= y.len()) {
        return Err(MmError::Parameter(format!("map target {bad} out of range")));
    }
    let mut worst_distortion = (0.0, String::new(), String::new());
    for a in 0..x.len() {
        let row_a = x.row(a);
        let row_fa = y.row(phi[a]);
        for b in (a + 1)..x.len() {
            let d = (row_a[b] - row_fa[phi[b]]).abs();
            if d > worst_distortion.0 {
                worst_distortion = (d, x.id(a).to_string(), x.id(b).to_string());
            }
        }
    }
    let image: Vec<VertexIdx> = {
        let mut im = phi.to_vec();
        im.sort_unstable();
        im.dedup();
        im
    };
    let to_image = y.distance_to_set(&image);
    let mut worst_gap = (0.0, String::new());
    for v in 0..y.len() {
        if to_image[v] > worst_gap.0 {
            worst_gap = (to_image[v], y.id(v).to_string());
        }
    }
    let pass = worst_distortion.0 < eps && worst_gap.0 < eps;
    Ok(ApproximationVerdict { pass, worst_distortion, worst_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{DiscreteSpace, EdgeSpec, RegionKind, VertexSpec};
    use crate::zoo::{generate, ZooSpec};

    fn zoo(text: &str) -> DiscreteSpace {
        generate(&ZooSpec::parse(text).unwrap()).unwrap()
    }

    fn two_point(a: f64) -> DiscreteSpace {
        DiscreteSpace::new(
            vec![
                VertexSpec { id: "p".into(), weight: 1.0, coord: None },
                VertexSpec { id: "q".into(), weight: 1.0, coord: None },
            ],
            vec![EdgeSpec { u: "p".into(), v: "q".into(), len: a }],
            a,
            None,
        )
        .unwrap()
    }

    #[test]
    fn separated_set_is_a_net() {
        let s = zoo("interval?h=0.01");
        let eps = 0.3;
        let set = maximal_separated_set(&s, eps, 42);
        assert!(set.len() >= 3 && set.len() <= 5, "size {}", set.len());
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i + 1..] {
                assert!(s.distance(a, b) >= eps);
            }
        }
        let to_set = s.distance_to_set(&set);
        assert!(to_set.iter().all(|&d| d <= eps));
    }

    #[test]
    fn covering_interval_at_quarter_scale() {
        let s = zoo("interval?h=0.01");
        // first-uncovered greedy steps by about delta, not 2 delta, so the
        // count can run up to twice the true covering number
        let n = covering_number(&s, 0.25);
        assert!((2..=6).contains(&n), "N = {n}");
        // separated(2 delta) <= N(delta)
        let sep = maximal_separated_set(&s, 0.5, 1).len();
        assert!(sep <= n);
    }

    #[test]
    fn length_measure_estimate_on_interval() {
        let s = zoo("interval?h=0.005");
        // upper bound on length 1 with at most the greedy factor of 2
        let est = hausdorff_measure_estimate(&s, 1.0, 0.1).unwrap();
        assert!((0.8..=2.2).contains(&est), "estimate {est}");
        // s = 0 counts cover elements
        let count = hausdorff_measure_estimate(&s, 0.0, 0.3).unwrap();
        assert!((count - covering_number(&s, 0.3) as f64).abs() < 1e-9);
    }

    #[test]
    fn square_cube_scale_measure_vanishes() {
        let s = zoo("grid?h=0.0625");
        let coarse = hausdorff_measure_estimate(&s, 3.0, 0.4).unwrap();
        let fine = hausdorff_measure_estimate(&s, 3.0, 0.15).unwrap();
        assert!(fine < coarse);
    }

    #[test]
    fn dimension_slopes() {
        let line = zoo("interval?h=0.005");
        let grid: Vec<f64> = (0..8).map(|i| 0.02 * 1.5_f64.powi(i)).collect();
        let p = dimension_estimate(&line, &grid).unwrap();
        assert!((p.dimension - 1.0).abs() < 0.15, "line slope {}", p.dimension);

        // scales stay well under the diameter: near it the count saturates
        // and drags the fitted slope down
        let square = zoo("grid?h=0.0078125");
        let grid: Vec<f64> = (0..8).map(|i| 0.04 * 1.3_f64.powi(i)).collect();
        let p = dimension_estimate(&square, &grid).unwrap();
        assert!((p.dimension - 2.0).abs() < 0.15, "square slope {}", p.dimension);
    }

    #[test]
    fn hausdorff_distance_cases() {
        let s = zoo("interval?h=0.01");
        let all = Region::from_members(&s, RegionKind::Explicit, (0..s.len()).collect());
        assert_eq!(hausdorff_distance(&s, &all, &all).unwrap(), 0.0);
        let ends = Region::from_members(
            &s,
            RegionKind::Explicit,
            vec![s.resolve("left").unwrap(), s.resolve("right").unwrap()],
        );
        let d = hausdorff_distance(&s, &all, &ends).unwrap();
        assert!((d - 0.5).abs() < 0.02, "d = {d}");
    }

    #[test]
    fn two_point_spaces_distance() {
        let x = two_point(1.0);
        let y = two_point(3.0);
        let (lo, hi) = gh_distance_small(&x, &y, 1_000_000).unwrap();
        assert_eq!(lo, hi);
        assert!((lo - 1.0).abs() < 1e-12, "distance {lo}");
    }

    #[test]
    fn identical_spaces_distance_zero() {
        let x = zoo("star?d=3&h=0.5&l=1");
        let (lo, hi) = gh_distance_small(&x, &x, 10_000_000).unwrap();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 0.0);
    }

    #[test]
    fn point_versus_interval_distance() {
        let p = DiscreteSpace::new(
            vec![VertexSpec { id: "p".into(), weight: 1.0, coord: None }],
            vec![],
            1.0,
            None,
        )
        .unwrap();
        let line = zoo("interval?h=0.25");
        let (lo, _) = gh_distance_small(&p, &line, 1_000_000).unwrap();
        assert!((lo - 0.5).abs() < 1e-12, "distance {lo}");
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let x = zoo("interval?h=0.2");
        let y = zoo("cycle?l=1&h=0.2");
        let err = gh_distance_small(&x, &y, 3).unwrap_err();
        assert!(matches!(err, MmError::BudgetExceeded(_)));
    }

    #[test]
    fn approximation_check_identity_and_collapse() {
        let s = zoo("interval?h=0.1");
        let id: Vec<usize> = (0..s.len()).collect();
        assert!(check_epsilon_approximation(&s, &s, &id, 0.01).unwrap().pass);
        let collapse = vec![0; s.len()];
        let v = check_epsilon_approximation(&s, &s, &collapse, 0.2).unwrap();
        assert!(!v.pass);
        assert!(v.worst_gap.0 > 0.2 || v.worst_distortion.0 > 0.2);
    }

    #[test]
    fn coarsening_map_is_a_small_approximation() {
        let fine = zoo("interval?h=0.05");
        let coarse = zoo("interval?h=0.1");
        // map each fine vertex to the nearest coarse one by position index
        let phi: Vec<usize> = (0..fine.len()).map(|i| (i + 1) / 2).collect();
        let v = check_epsilon_approximation(&fine, &coarse, &phi, 0.15).unwrap();
        assert!(v.pass, "{v:?}");
    }
}
