//! Root-clustering detector and estimator.
//!
//! The roots of all eigenvector polynomials are grouped by single-linkage
//! agglomerative clustering. Tight clusters with at least
//! [`default_min_members`] roots are sources; a cluster holding more than
//! `N - 1` roots cannot come from one source and is split by phase. Each source's direction comes from the
//! circular mean phase of its roots projected onto the unit circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DoaError, Result};
use crate::linalg::CMatrix;
use crate::poly::ComplexPolynomial;

/// Floor on the size of a source cluster.
pub const MIN_SOURCE_CLUSTER: usize = 3;

/// Angular uncertainty table behind [`default_delta`], in degrees:
/// below 0 dB, 0 to 15 dB, above 15 dB.
pub const DELTA_THETA_TABLE_DEG: [f64; 3] = [1.5, 1.2, 1.0];

/// Largest cost increase, relative to the unconstrained split, accepted to
/// keep every split group at [`MIN_SOURCE_CLUSTER`] roots.
pub const SPLIT_FLOOR_COST_RATIO: f64 = 4.0;

/// Smallest cluster counted as a source: half the array, and never fewer
/// than [`MIN_SOURCE_CLUSTER`] roots.
pub fn default_min_members(n_sensors: usize) -> usize {
    n_sensors.div_ceil(2).max(MIN_SOURCE_CLUSTER)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootCluster {
    pub members: Vec<Complex64>,
    /// Positions of the members in the clustered root list.
    pub indices: Vec<usize>,
    /// Height of the top merge, i.e. the largest single-linkage edge.
    pub dissimilarity: f64,
}

impl RootCluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootClusterSet {
    pub clusters: Vec<RootCluster>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub l_hat: usize,
    pub doas_deg: Vec<f64>,
    /// Root count behind each reported direction, in the same order.
    pub cluster_sizes: Vec<usize>,
    /// Consensus roots `e^{j phi_avg}` behind each direction.
    pub consensus_roots: Vec<Complex64>,
    /// Set when a split had to cut between roots of identical phase.
    pub forced_split: bool,
}

/// Roots of every column of `q`, each column read as `q_i^H d(z)`, in
/// column order.
pub fn collect_roots(q: &CMatrix) -> Result<Vec<Complex64>> {
    let per_column: Vec<Result<Vec<Complex64>>> = (0..q.ncols())
        .into_par_iter()
        .map(|j| {
            let p = ComplexPolynomial::from_array_vector(q.column(j).iter());
            if p.is_zero() {
                return Err(DoaError::domain(format!("column {j} is zero")));
            }
            p.roots()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_column {
        out.extend(r?);
    }
    Ok(out)
}

/// Single-linkage clustering cut at `delta`: two roots share a cluster iff a
/// chain of pairwise distances `<= delta` links them.
///
/// Builds the minimum spanning tree with Prim's algorithm (the single-linkage
/// dendrogram) and keeps the edges not above the cut. Clusters are ordered
/// by their first member index.
pub fn agglomerative_cluster(roots: &[Complex64], delta: f64) -> Result<RootClusterSet> {
    if !(delta > 0.0) {
        return Err(DoaError::domain(format!("delta must be positive, got {delta}")));
    }
    let n = roots.len();
    if n == 0 {
        return Ok(RootClusterSet { clusters: Vec::new(), delta });
    }

    // Prim: best[j] = distance from the tree to j, parent[j] = tree vertex
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(n - 1);
    best[0] = 0.0;
    for _ in 0..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        if parent[next] != usize::MAX {
            edges.push((best[next], parent[next].min(next), parent[next].max(next)));
        }
        for j in 0..n {
            if !in_tree[j] {
                let d = (roots[next] - roots[j]).norm();
                if d < best[j] {
                    best[j] = d;
                    parent[j] = next;
                }
            }
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf = UnionFind::new(n);
    let mut height = vec![0.0f64; n];
    for &(d, a, b) in edges.iter().take_while(|e| e.0 <= delta) {
        let (ra, rb) = (uf.find(a), uf.find(b));
        let root = uf.union(ra, rb);
        height[root] = d.max(height[ra]).max(height[rb]);
    }

    let mut slot = vec![usize::MAX; n];
    let mut clusters: Vec<RootCluster> = Vec::new();
    for (i, &root) in roots.iter().enumerate() {
        let r = uf.find(i);
        if slot[r] == usize::MAX {
            slot[r] = clusters.len();
            clusters.push(RootCluster { members: Vec::new(), indices: Vec::new(), dissimilarity: height[r] });
        }
        let c = &mut clusters[slot[r]];
        c.members.push(root);
        c.indices.push(i);
    }
    Ok(RootClusterSet { clusters, delta })
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        if a == b {
            return a;
        }
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        big
    }
}

/// Circular mean `arg(sum e^{j phi_k})` of the phases of nonzero roots.
pub fn mean_phase(roots: &[Complex64]) -> f64 {
    let s: Complex64 = roots.iter().filter(|z| z.norm() > 0.0).map(|z| z / z.norm()).sum();
    if s.norm() == 0.0 {
        f64::NAN
    } else {
        s.arg()
    }
}

/// `asin(phi / pi)` in degrees; phases outside `[-pi, pi]` are an error.
pub fn phase_to_angle(phi: f64) -> Result<f64> {
    if !phi.is_finite() || phi.abs() > PI {
        return Err(DoaError::UnmappedPhase(phi));
    }
    Ok((phi / PI).asin().to_degrees())
}

fn wrap(phi: f64) -> f64 {
    let mut x = (phi + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGroup {
    pub mean_phase: f64,
    pub member_phases: Vec<f64>,
    pub members: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub groups: Vec<PhaseGroup>,
    /// At least one cut fell between roots of identical phase.
    pub forced: bool,
}

/// Splits a cluster into the fewest groups of at most `N - 1` roots. Groups
/// are contiguous in phase (measured from the cluster's circular mean) and
/// the cuts minimise the summed squared deviation from each group's mean.
/// Groups are held to [`MIN_SOURCE_CLUSTER`] roots when that costs at most
/// [`SPLIT_FLOOR_COST_RATIO`] times the unconstrained optimum.
pub fn split_cluster(members: &[Complex64], n_sensors: usize) -> SplitOutcome {
    let cap = n_sensors.saturating_sub(1).max(1);
    let s = members.len();
    if s <= cap {
        return SplitOutcome { groups: vec![phase_group(members.to_vec())], forced: false };
    }
    let center = mean_phase(members);
    let center = if center.is_finite() { center } else { 0.0 };
    let mut order: Vec<(f64, Complex64)> = members.iter().map(|&z| (wrap(z.arg() - center), z)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = s.div_ceil(cap);
    // each part stands for a source, so keep it source-sized when possible
    let phases: Vec<f64> = order.iter().map(|p| p.0).collect();
    let (mut cuts, free_cost) = contiguous_partition(&phases, k, 1, cap);
    if k * MIN_SOURCE_CLUSTER <= s {
        let (floored, cost) = contiguous_partition(&phases, k, MIN_SOURCE_CLUSTER.min(cap), cap);
        // a floor that only fits by absorbing stray roots is not kept
        if cost <= SPLIT_FLOOR_COST_RATIO * free_cost {
            cuts = floored;
        }
    }

    // a cut between equal phases is arbitrary
    let forced = cuts.iter().any(|&c| order[c - 1].0 == order[c].0);
    if forced {
        log::warn!("split of {s} roots cut between identical phases");
    }
    let mut done = Vec::with_capacity(cuts.len() + 1);
    let mut lo = 0;
    for hi in cuts.into_iter().chain([s]) {
        done.push(order[lo..hi].iter().map(|p| p.1).collect::<Vec<_>>());
        lo = hi;
    }
    let mut groups: Vec<PhaseGroup> = done.into_iter().map(phase_group).collect();
    groups.sort_by(|a, b| a.mean_phase.total_cmp(&b.mean_phase));
    SplitOutcome { groups, forced }
}

fn phase_group(members: Vec<Complex64>) -> PhaseGroup {
    PhaseGroup { mean_phase: mean_phase(&members), member_phases: members.iter().map(|z| z.arg()).collect(), members }
}

/// Cut positions splitting sorted `x` into `k` runs of `floor..=cap` entries
/// with the least total within-run squared deviation.
fn contiguous_partition(x: &[f64], k: usize, floor: usize, cap: usize) -> (Vec<usize>, f64) {
    let n = x.len();
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for (i, &v) in x.iter().enumerate() {
        s1[i + 1] = s1[i] + v;
        s2[i + 1] = s2[i] + v * v;
    }
    let sse = |i: usize, j: usize| {
        let m = (j - i) as f64;
        let a = s1[j] - s1[i];
        (s2[j] - s2[i] - a * a / m).max(0.0)
    };
    // best[g][j]: cost of the first j entries in g runs
    let mut best = vec![vec![f64::INFINITY; n + 1]; k + 1];
    let mut from = vec![vec![0usize; n + 1]; k + 1];
    best[0][0] = 0.0;
    for g in 1..=k {
        for j in g..=n {
            if j < floor {
                continue;
            }
            for i in j.saturating_sub(cap).max(g - 1)..=j - floor {
                let c = best[g - 1][i] + sse(i, j);
                if c < best[g][j] {
                    best[g][j] = c;
                    from[g][j] = i;
                }
            }
        }
    }
    let mut cuts = Vec::with_capacity(k - 1);
    let mut j = n;
    for g in (2..=k).rev() {
        j = from[g][j];
        cuts.push(j);
    }
    cuts.reverse();
    (cuts, best[k][n])
}

/// Clusters `roots` at radius `delta` and reports the sources found: every
/// cluster with at least [`default_min_members`] roots, or split group with
/// at least [`MIN_SOURCE_CLUSTER`], contributes one direction, at most
/// `N - 1` in total.
pub fn detect_and_localize(roots: &[Complex64], delta: f64, n_sensors: usize) -> Result<DetectionResult> {
    detect_and_localize_with(roots, delta, n_sensors, default_min_members(n_sensors))
}

/// As [`detect_and_localize`] with an explicit minimum source cluster size
/// (raised to [`MIN_SOURCE_CLUSTER`] if smaller).
pub fn detect_and_localize_with(
    roots: &[Complex64],
    delta: f64,
    n_sensors: usize,
    min_members: usize,
) -> Result<DetectionResult> {
    let min_members = min_members.max(MIN_SOURCE_CLUSTER);
    let set = agglomerative_cluster(roots, delta)?;
    let cap = n_sensors.saturating_sub(1);

    // (size, tightness, members)
    let mut sources: Vec<(usize, f64, Vec<Complex64>)> = Vec::new();
    let mut forced_split = false;
    for c in set.clusters.iter().filter(|c| c.len() >= min_members) {
        if c.len() > cap {
            let split = split_cluster(&c.members, n_sensors);
            forced_split |= split.forced;
            // an oversized cluster holds several sources, so its parts only
            // need the base size
            for g in split.groups.into_iter().filter(|g| g.members.len() >= MIN_SOURCE_CLUSTER) {
                sources.push((g.members.len(), c.dissimilarity, g.members));
            }
        } else {
            sources.push((c.len(), c.dissimilarity, c.members.clone()));
        }
    }
    // a centroid within delta of the origin has no resolvable phase
    sources.retain(|s| {
        let centroid = s.2.iter().sum::<Complex64>() / s.2.len() as f64;
        centroid.norm() > delta && mean_phase(&s.2).is_finite()
    });
    if sources.len() > cap {
        sources.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.total_cmp(&b.1)));
        sources.truncate(cap);
    }

    let mut found = Vec::with_capacity(sources.len());
    for (size, _, members) in sources {
        let phi = mean_phase(&members);
        found.push((phase_to_angle(phi)?, size, Complex64::from_polar(1.0, phi)));
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(DetectionResult {
        l_hat: found.len(),
        doas_deg: found.iter().map(|f| f.0).collect(),
        cluster_sizes: found.iter().map(|f| f.1).collect(),
        consensus_roots: found.iter().map(|f| f.2).collect(),
        forced_split,
    })
}

/// Root-space radius `|1 - e^{-j pi dtheta}|` matching an angular
/// uncertainty of `delta_theta_deg` degrees.
pub fn delta_from_uncertainty(delta_theta_deg: f64) -> f64 {
    (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -PI * delta_theta_deg.to_radians())).norm()
}

/// Angular uncertainty assumed at a given SNR, from [`DELTA_THETA_TABLE_DEG`].
pub fn default_delta_theta_deg(snr_db: f64) -> f64 {
    if snr_db < 0.0 {
        DELTA_THETA_TABLE_DEG[0]
    } else if snr_db <= 15.0 {
        DELTA_THETA_TABLE_DEG[1]
    } else {
        DELTA_THETA_TABLE_DEG[2]
    }
}

pub fn default_delta(snr_db: f64, _n_sensors: usize) -> f64 {
    delta_from_uncertainty(default_delta_theta_deg(snr_db))
}
