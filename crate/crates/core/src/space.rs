//! Discretized metric measure spaces: vertex-weighted graphs with an induced
//! shortest-path metric, plus the region / component / shadow queries that
//! everything else is built on.
//!
//! A [`DiscreteSpace`] is immutable after construction. Distance rows are
//! computed by Dijkstra on demand and cached, so all queries are pure reads
//! and the space can be shared across threads.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, RwLock};

use crate::error::{MmError, Result};

/// Index of a vertex inside a [`DiscreteSpace`]. Stable for the lifetime of
/// the space; the string id is only used at the file-format boundary.
pub type VertexIdx = usize;

#[derive(Debug, Clone)]
pub struct VertexSpec {
    pub id: String,
    pub weight: f64,
    /// Optional embedding coordinate, kept for provenance only. Never used
    /// by metric queries.
    pub coord: Option<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub u: String,
    pub v: String,
    pub len: f64,
}

/// A weighted graph with a vertex measure, modelling a finite discretization
/// of a metric measure space. The metric is the shortest-path distance.
pub struct DiscreteSpace {
    ids: Vec<String>,
    id_index: HashMap<String, VertexIdx>,
    /// Base vertex weights. The effective measure of vertex `v` is
    /// `measure_scale * weights[v]`; keeping the scale separate lets measure
    /// ratios cancel it exactly (see `rescale`).
    weights: Vec<f64>,
    coords: Vec<Option<[f64; 2]>>,
    adj: Vec<Vec<(VertexIdx, f64)>>,
    edges: Vec<(VertexIdx, VertexIdx, f64)>,
    mesh: f64,
    tau: f64,
    measure_scale: f64,
    total_weight: f64,
    /// Free-form annotations, e.g. landmark vertices of generated spaces.
    pub meta: HashMap<String, String>,
    dist_cache: RwLock<HashMap<VertexIdx, Arc<Vec<f64>>>>,
}

impl std::fmt::Debug for DiscreteSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiscreteSpace")
            .field("vertices", &self.ids.len())
            .field("edges", &self.edges.len())
            .field("mesh", &self.mesh)
            .field("tau", &self.tau)
            .finish()
    }
}

impl DiscreteSpace {
    /// Build and validate a space. `tau` defaults to `2 * mesh` when `None`.
    pub fn new(
        vertices: Vec<VertexSpec>,
        edges: Vec<EdgeSpec>,
        mesh: f64,
        tau: Option<f64>,
    ) -> Result<Self> {
        if !(mesh > 0.0) {
            return Err(MmError::Parameter(format!("mesh must be positive, got {mesh}")));
        }
        let tau = tau.unwrap_or(2.0 * mesh);
        if !(tau >= 0.0) {
            return Err(MmError::Parameter(format!("tau must be nonnegative, got {tau}")));
        }

        let mut ids = Vec::with_capacity(vertices.len());
        let mut weights = Vec::with_capacity(vertices.len());
        let mut coords = Vec::with_capacity(vertices.len());
        let mut id_index = HashMap::with_capacity(vertices.len());
        for v in vertices {
            if v.weight < 0.0 || !v.weight.is_finite() {
                return Err(MmError::NegativeWeight { id: v.id, w: v.weight });
            }
            if id_index.insert(v.id.clone(), ids.len()).is_some() {
                return Err(MmError::DuplicateVertex(v.id));
            }
            ids.push(v.id);
            weights.push(v.weight);
            coords.push(v.coord);
        }

        let total_weight: f64 = weights.iter().sum();
        if !(total_weight > 0.0) {
            return Err(MmError::ZeroMeasure { total: total_weight });
        }

        let mut adj = vec![Vec::new(); ids.len()];
        let mut edge_list = Vec::with_capacity(edges.len());
        for e in edges {
            if !(e.len > 0.0) || !e.len.is_finite() {
                return Err(MmError::BadEdgeLength { u: e.u, v: e.v, len: e.len });
            }
            let u = *id_index
                .get(&e.u)
                .ok_or_else(|| MmError::EdgeUnknownVertex(e.u.clone()))?;
            let v = *id_index
                .get(&e.v)
                .ok_or_else(|| MmError::EdgeUnknownVertex(e.v.clone()))?;
            adj[u].push((v, e.len));
            adj[v].push((u, e.len));
            edge_list.push((u, v, e.len));
        }

        let space = DiscreteSpace {
            ids,
            id_index,
            weights,
            coords,
            adj,
            edges: edge_list,
            mesh,
            tau,
            measure_scale: 1.0,
            total_weight,
            meta: HashMap::new(),
            dist_cache: RwLock::new(HashMap::new()),
        };

        // connectivity
        if space.len() > 1 {
            let row = space.dijkstra(0);
            let reachable = row.iter().filter(|d| d.is_finite()).count();
            if reachable != space.len() {
                return Err(MmError::Disconnected {
                    from: space.ids[0].clone(),
                    reachable,
                    total: space.len(),
                });
            }
        }
        Ok(space)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn id(&self, v: VertexIdx) -> &str {
        &self.ids[v]
    }

    pub fn index_of(&self, id: &str) -> Result<VertexIdx> {
        self.id_index
            .get(id)
            .copied()
            .ok_or_else(|| MmError::UnknownVertex(id.to_string()))
    }

    /// Resolve either a vertex id or a meta landmark name.
    pub fn resolve(&self, name: &str) -> Result<VertexIdx> {
        if let Some(id) = self.meta.get(name) {
            return self.index_of(id);
        }
        self.index_of(name)
    }

    pub fn coord(&self, v: VertexIdx) -> Option<[f64; 2]> {
        self.coords[v]
    }

    /// Effective measure of a single vertex.
    pub fn weight(&self, v: VertexIdx) -> f64 {
        self.measure_scale * self.weights[v]
    }

    /// Base (unscaled) weight; ratios of sums of these cancel the measure
    /// scale exactly.
    pub fn raw_weight(&self, v: VertexIdx) -> f64 {
        self.weights[v]
    }

    pub fn measure_scale(&self) -> f64 {
        self.measure_scale
    }

    pub fn total_measure(&self) -> f64 {
        self.measure_scale * self.total_weight
    }

    pub fn neighbors(&self, v: VertexIdx) -> &[(VertexIdx, f64)] {
        &self.adj[v]
    }

    pub fn edges(&self) -> &[(VertexIdx, VertexIdx, f64)] {
        &self.edges
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(|s| s.as_str())
    }

    fn dijkstra(&self, source: VertexIdx) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Item(f64, VertexIdx);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> Ordering {
                // min-heap on distance, tie-break on index for determinism
                other
                    .0
                    .partial_cmp(&self.0)
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| other.1.cmp(&self.1))
            }
        }
        let mut dist = vec![f64::INFINITY; self.len()];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Item(0.0, source));
        while let Some(Item(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(w, len) in &self.adj[v] {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Item(nd, w));
                }
            }
        }
        dist
    }

    /// Distances from `source` to every vertex, cached.
    pub fn row(&self, source: VertexIdx) -> Arc<Vec<f64>> {
        if let Some(row) = self.dist_cache.read().unwrap().get(&source) {
            return Arc::clone(row);
        }
        let row = Arc::new(self.dijkstra(source));
        self.dist_cache
            .write()
            .unwrap()
            .insert(source, Arc::clone(&row));
        row
    }

    pub fn distance(&self, a: VertexIdx, b: VertexIdx) -> f64 {
        if a == b {
            return 0.0;
        }
        self.row(a)[b]
    }

    /// Shortest path from `source` to `target` as a vertex sequence.
    pub fn shortest_path(&self, source: VertexIdx, target: VertexIdx) -> Vec<VertexIdx> {
        // Dijkstra with predecessors; deterministic tie-break on vertex index.
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut prev = vec![usize::MAX; self.len()];
        dist[source] = 0.0;
        let mut heap: BinaryHeap<(std::cmp::Reverse<ordered::F64>, usize)> = BinaryHeap::new();
        heap.push((std::cmp::Reverse(ordered::F64(0.0)), source));
        while let Some((std::cmp::Reverse(ordered::F64(d)), v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            if v == target {
                break;
            }
            for &(w, len) in &self.adj[v] {
                let nd = d + len;
                if nd < dist[w] || (nd == dist[w] && v < prev[w]) {
                    dist[w] = nd;
                    prev[w] = v;
                    heap.push((std::cmp::Reverse(ordered::F64(nd)), w));
                }
            }
        }
        let mut path = vec![target];
        let mut cur = target;
        while cur != source {
            cur = prev[cur];
            if cur == usize::MAX {
                return Vec::new();
            }
            path.push(cur);
        }
        path.reverse();
        path
    }

    /// Full distance matrix. Prefer [`DiscreteSpace::row`] for large spaces.
    pub fn distance_matrix(&self) -> Vec<Arc<Vec<f64>>> {
        (0..self.len()).map(|v| self.row(v)).collect()
    }

    /// Multi-source distance: for every vertex, the distance to the nearest
    /// source.
    pub fn distance_to_set(&self, sources: &[VertexIdx]) -> Vec<f64> {
        self.offset_distance_to_set(&sources.iter().map(|&s| (s, 0.0)).collect::<Vec<_>>())
    }

    /// Multi-source distance with per-source starting offsets: for every
    /// vertex v, `min over sources (offset_s + d(s, v))`. Offsets may be
    /// negative; edge lengths are positive, so Dijkstra stays correct.
    pub fn offset_distance_to_set(&self, sources: &[(VertexIdx, f64)]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap: BinaryHeap<(std::cmp::Reverse<ordered::F64>, usize)> = BinaryHeap::new();
        for &(s, off) in sources {
            if off < dist[s] {
                dist[s] = off;
                heap.push((std::cmp::Reverse(ordered::F64(off)), s));
            }
        }
        while let Some((std::cmp::Reverse(ordered::F64(d)), v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(w, len) in &self.adj[v] {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push((std::cmp::Reverse(ordered::F64(nd)), w));
                }
            }
        }
        dist
    }

    /// Largest distance from `v` to any vertex.
    pub fn eccentricity(&self, v: VertexIdx) -> f64 {
        self.row(v).iter().copied().fold(0.0, f64::max)
    }

    pub fn diameter(&self) -> f64 {
        (0..self.len()).map(|v| self.eccentricity(v)).fold(0.0, f64::max)
    }

    /// Midpoint criterion defect: `max_{x,y} (min_z max(d(x,z), d(z,y)) - d(x,y)/2)`.
    /// Small values certify that the discretization approximates a length
    /// space. O(n^3): intended for desk-scale spaces.
    pub fn length_space_defect(&self) -> f64 {
        let n = self.len();
        let rows: Vec<Arc<Vec<f64>>> = (0..n).map(|v| self.row(v)).collect();
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in (x + 1)..n {
                let dxy = rows[x][y];
                let mut best = f64::INFINITY;
                for z in 0..n {
                    let m = rows[x][z].max(rows[z][y]);
                    if m < best {
                        best = m;
                    }
                }
                worst = worst.max(best - dxy / 2.0);
            }
        }
        worst
    }

    /// Quadruples `(y, x0, x1, x2)` where `y` is a tau-midpoint of both
    /// `(x0, x1)` and `(x0, x2)` while `d(x1, x2) > tolerance`. Empty output
    /// means the space is discretely nonbranching at this tolerance.
    ///
    /// A tau-midpoint satisfies both `|d(x0,y) - d(x0,x1)/2| <= tau` and
    /// `|d(y,x1) - d(x0,x1)/2| <= tau`.
    pub fn nonbranching_witnesses(
        &self,
        tolerance: f64,
    ) -> Vec<(VertexIdx, VertexIdx, VertexIdx, VertexIdx)> {
        let n = self.len();
        let rows: Vec<Arc<Vec<f64>>> = (0..n).map(|v| self.row(v)).collect();
        let tau = self.tau;
        let mut out = Vec::new();
        for x0 in 0..n {
            for y in 0..n {
                if y == x0 {
                    continue;
                }
                let dy = rows[x0][y];
                // endpoints for which y is a tau-midpoint
                let mut ends: Vec<VertexIdx> = Vec::new();
                for x1 in 0..n {
                    if x1 == x0 || x1 == y {
                        continue;
                    }
                    let half = rows[x0][x1] / 2.0;
                    if (dy - half).abs() <= tau && (rows[y][x1] - half).abs() <= tau {
                        ends.push(x1);
                    }
                }
                for i in 0..ends.len() {
                    for j in (i + 1)..ends.len() {
                        if rows[ends[i]][ends[j]] > tolerance {
                            out.push((y, x0, ends[i], ends[j]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Scale distances by `a` and measure by `b`.
    ///
    /// Edge lengths, mesh and tau are multiplied by `a`; the measure scale
    /// absorbs `b` so that base weights (hence measure ratios) are untouched.
    pub fn rescale(&self, a: f64, b: f64) -> Result<DiscreteSpace> {
        if !(a > 0.0) || !(b > 0.0) {
            return Err(MmError::Parameter(format!(
                "rescale factors must be positive, got a={a}, b={b}"
            )));
        }
        let space = DiscreteSpace {
            ids: self.ids.clone(),
            id_index: self.id_index.clone(),
            weights: self.weights.clone(),
            coords: self.coords.clone(),
            adj: self
                .adj
                .iter()
                .map(|nbrs| nbrs.iter().map(|&(w, l)| (w, l * a)).collect())
                .collect(),
            edges: self.edges.iter().map(|&(u, v, l)| (u, v, l * a)).collect(),
            mesh: self.mesh * a,
            tau: self.tau * a,
            measure_scale: self.measure_scale * b,
            total_weight: self.total_weight,
            meta: self.meta.clone(),
            dist_cache: RwLock::new(HashMap::new()),
        };
        Ok(space)
    }

    /// Induced sub-space on the region `a`, carrying the restricted measure.
    pub fn restrict(&self, a: &Region) -> Result<DiscreteSpace> {
        if a.members.is_empty() {
            return Err(MmError::Parameter("restrict on empty region".into()));
        }
        let vertices: Vec<VertexSpec> = a
            .members
            .iter()
            .map(|&v| VertexSpec {
                id: self.ids[v].clone(),
                weight: self.weights[v],
                coord: self.coords[v],
            })
            .collect();
        let edges: Vec<EdgeSpec> = self
            .edges
            .iter()
            .filter(|(u, v, _)| a.contains(*u) && a.contains(*v))
            .map(|&(u, v, l)| EdgeSpec {
                u: self.ids[u].clone(),
                v: self.ids[v].clone(),
                len: l,
            })
            .collect();
        let mut sub = DiscreteSpace::new(vertices, edges, self.mesh, Some(self.tau))
            .map_err(|e| match e {
                MmError::Disconnected { .. } => MmError::RestrictDisconnected,
                other => other,
            })?;
        sub.measure_scale = self.measure_scale;
        Ok(sub)
    }

    /// True iff every tau-geodesic vertex between any two members of `a`
    /// lies in `a` (betweenness test, no path enumeration).
    pub fn is_convex(&self, a: &Region) -> bool {
        let n = self.len();
        for (i, &x) in a.members.iter().enumerate() {
            let rx = self.row(x);
            for &y in &a.members[i + 1..] {
                let ry = self.row(y);
                let dxy = rx[y];
                for z in 0..n {
                    if rx[z] + ry[z] <= dxy + self.tau && !a.contains(z) {
                        return false;
                    }
                }
            }
        }
        true
    }
}

mod ordered {
    /// f64 wrapper ordered totally; only finite values are ever inserted.
    #[derive(PartialEq, PartialOrd)]
    pub struct F64(pub f64);
    impl Eq for F64 {}
    impl Ord for F64 {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
        }
    }
}

/// How a [`Region`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Ball,
    ClosedBall,
    Annulus,
    Sphere,
    Component,
    Explicit,
}

/// A set of vertices produced by a metric query, with its exact measure.
#[derive(Debug, Clone)]
pub struct Region {
    pub kind: RegionKind,
    pub center: Option<VertexIdx>,
    pub r1: f64,
    pub r2: f64,
    /// Sorted vertex indices.
    pub members: Vec<VertexIdx>,
    pub measure: f64,
}

impl Region {
    pub fn contains(&self, v: VertexIdx) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Sum of base (unscaled) weights; use for scale-cancelling ratios.
    pub fn raw_weight(&self, space: &DiscreteSpace) -> f64 {
        self.members.iter().map(|&v| space.raw_weight(v)).sum()
    }

    pub fn from_members(space: &DiscreteSpace, kind: RegionKind, mut members: Vec<VertexIdx>) -> Region {
        members.sort_unstable();
        members.dedup();
        let raw: f64 = members.iter().map(|&v| space.raw_weight(v)).sum();
        Region {
            kind,
            center: None,
            r1: 0.0,
            r2: 0.0,
            members,
            measure: space.measure_scale() * raw,
        }
    }
}

/// Ball / annulus / sphere membership around `center`.
///
/// Comparisons carry a half-mesh guard band: the open ball is
/// `d < r - h/2`, the closed ball `d <= r + h/2`, so points within `h/2` of
/// the boundary belong to the closed ball only and verdicts are mesh-stable.
/// Spheres use the space tolerance: `|d - r| <= tau`.
pub fn region(
    space: &DiscreteSpace,
    kind: RegionKind,
    center: VertexIdx,
    r1: f64,
    r2: f64,
) -> Result<Region> {
    if r1 < 0.0 || r2 < 0.0 {
        return Err(MmError::Parameter(format!("radii must be nonnegative: {r1}, {r2}")));
    }
    if kind == RegionKind::Annulus && r2 < r1 {
        return Err(MmError::Parameter(format!("annulus needs r1 <= r2, got {r1} > {r2}")));
    }
    let guard = space.mesh() / 2.0;
    let tau = space.tau();
    let row = space.row(center);
    let pred = |d: f64| -> bool {
        match kind {
            RegionKind::Ball => d < r1 - guard,
            RegionKind::ClosedBall => d <= r1 + guard,
            RegionKind::Annulus => d > r1 + guard && d < r2 - guard,
            RegionKind::Sphere => (d - r1).abs() <= tau,
            RegionKind::Component | RegionKind::Explicit => {
                unreachable!("component/explicit regions are not metric queries")
            }
        }
    };
    let members: Vec<VertexIdx> = (0..space.len()).filter(|&v| pred(row[v])).collect();
    let raw: f64 = members.iter().map(|&v| space.raw_weight(v)).sum();
    Ok(Region {
        kind,
        center: Some(center),
        r1,
        r2,
        members,
        measure: space.measure_scale() * raw,
    })
}

/// Connected components of the subgraph induced on
/// `region.members \ excluded`. Removing a vertex removes its incident
/// edges. Components are ordered by their smallest vertex index.
pub fn components(space: &DiscreteSpace, region: &Region, excluded: &[VertexIdx]) -> Vec<Region> {
    let mut in_set = vec![false; space.len()];
    for &v in &region.members {
        in_set[v] = true;
    }
    for &v in excluded {
        if v < in_set.len() {
            in_set[v] = false;
        }
    }
    let mut seen = vec![false; space.len()];
    let mut out = Vec::new();
    for &start in &region.members {
        if !in_set[start] || seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &(w, _) in space.neighbors(v) {
                if in_set[w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        out.push(Region::from_members(space, RegionKind::Component, comp));
    }
    out
}

/// Parameters of a geodesic-shadow query: the shadow window `(s1, s2)` sits
/// inside the source annulus `(r1, r2)`.
#[derive(Debug, Clone, Copy)]
pub struct ShadowParams {
    pub s1: f64,
    pub s2: f64,
    pub r1: f64,
    pub r2: f64,
    pub tau: f64,
}

impl ShadowParams {
    pub fn new(s1: f64, s2: f64, r1: f64, r2: f64, tau: f64) -> Result<ShadowParams> {
        if !(0.0 <= s1 && s1 < s2 && s1 <= r1 && r1 < r2 && s2 <= r2) {
            return Err(MmError::Parameter(format!(
                "shadow window ordering violated: s=({s1},{s2}), r=({r1},{r2})"
            )));
        }
        if tau < 0.0 {
            return Err(MmError::Parameter(format!("tau must be nonnegative, got {tau}")));
        }
        Ok(ShadowParams { s1, s2, r1, r2, tau })
    }
}

/// The set of vertices in the annulus `(s1, s2)` around `x` lying on a
/// tau-geodesic from `x` to some point of `u`:
/// `{ y : exists z in u with |d(x,y) + d(y,z) - d(x,z)| <= tau }`.
pub fn geodesic_shadow(
    space: &DiscreteSpace,
    x: VertexIdx,
    u: &Region,
    params: &ShadowParams,
) -> Result<Region> {
    let annulus = region(space, RegionKind::Annulus, x, params.s1, params.s2)?;
    if u.is_empty() {
        return Ok(Region {
            kind: RegionKind::Explicit,
            center: Some(x),
            r1: params.s1,
            r2: params.s2,
            members: Vec::new(),
            measure: 0.0,
        });
    }
    let row_x = space.row(x);
    // y is in the shadow iff min over z in U of d(y,z) - d(x,z) brings
    // d(x,y) + d(y,z) within tau of d(x,z). The inner minimum for all y at
    // once is one multi-source Dijkstra seeded with offsets -d(x,z).
    let sources: Vec<(VertexIdx, f64)> = u.members.iter().map(|&z| (z, -row_x[z])).collect();
    let excess = space.offset_distance_to_set(&sources);
    let members: Vec<VertexIdx> = annulus
        .members
        .iter()
        .copied()
        .filter(|&y| (row_x[y] + excess[y]).abs() <= params.tau)
        .collect();
    let raw: f64 = members.iter().map(|&v| space.raw_weight(v)).sum();
    Ok(Region {
        kind: RegionKind::Explicit,
        center: Some(x),
        r1: params.s1,
        r2: params.s2,
        members,
        measure: space.measure_scale() * raw,
    })
}
