//! Cap and arc statistics on lattice shells.
//!
//! Caps are measured with the chordal (Euclidean) radius about a point of the
//! sphere of radius `λ`. The exact two-dimensional mode works with arcs of a
//! given length instead; an arc of length `L` sits between the centered caps
//! of chordal radius `2λ·sin(L/4λ)` and `L` (see [`CapMode`]).

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::lattice_shell::{LatticePoint, Shell, MAX_DIM};

/// A spherical cap: all points within chordal distance `size_r` of
/// `λ·center` on the sphere of radius `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cap {
    center: Vec<f64>,
    size_r: f64,
}

impl Cap {
    pub fn new(center: Vec<f64>, size_r: f64) -> Result<Self> {
        let norm = center.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "cap center must be a unit vector (|c| = {norm})"
            )));
        }
        if !(size_r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cap size must be positive, got {size_r}"
            )));
        }
        Ok(Self { center, size_r })
    }

    /// The cap of chordal radius `size_r` centred at the direction of `p`.
    pub fn around(p: &LatticePoint, size_r: f64) -> Result<Self> {
        let v = p.to_f64();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("cap around the origin".into()));
        }
        Self::new(v.into_iter().map(|c| c / norm).collect(), size_r)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn size_r(&self) -> f64 {
        self.size_r
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Whether `p` lies in this cap on the sphere of radius `lambda`.
    pub fn contains(&self, p: &LatticePoint, lambda: f64) -> bool {
        let d2: f64 = p
            .coords()
            .iter()
            .zip(&self.center)
            .map(|(&x, &c)| {
                let t = x as f64 - lambda * c;
                t * t
            })
            .sum();
        d2 <= self.size_r * self.size_r
    }

    /// Shell points inside the cap, in shell order.
    pub fn members(&self, shell: &Shell) -> Result<Vec<LatticePoint>> {
        if self.dim() != shell.dim() {
            return Err(Error::DimensionMismatch {
                expected: shell.dim(),
                got: self.dim(),
            });
        }
        let lambda = shell.radius();
        Ok(shell
            .points()
            .iter()
            .filter(|p| self.contains(p, lambda))
            .copied()
            .collect())
    }

    /// Euclidean gap between two caps on the sphere of radius `lambda`:
    /// centre distance minus both radii.
    pub fn gap(&self, other: &Cap, lambda: f64) -> f64 {
        let d: f64 = self
            .center
            .iter()
            .zip(&other.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        lambda * d - self.size_r - other.size_r
    }
}

/// Counting mode for [`max_cap_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapMode {
    /// Exact maximum over all arcs of arc-length `r` on the circle (d = 2).
    Exact2d,
    /// Maximum over caps of chordal radius `r` centred at shell points.
    ///
    /// With `F(r)` the maximum over all caps of chordal radius `r`,
    /// `centered(r) ≤ F(r) ≤ centered(2r)`.
    Centered,
}

/// Uniform grid over the shell points for fixed-radius neighbour queries.
pub struct ShellIndex<'a> {
    shell: &'a Shell,
    side: f64,
    cells: HashMap<[i64; MAX_DIM], Vec<u32>>,
}

impl<'a> ShellIndex<'a> {
    pub fn new(shell: &'a Shell, cell_side: f64) -> Self {
        // A side below 1 buys nothing for integer points.
        let side = cell_side.max(1.0);
        let mut cells: HashMap<[i64; MAX_DIM], Vec<u32>> = HashMap::new();
        for (i, p) in shell.points().iter().enumerate() {
            cells.entry(cell_of(p, side)).or_default().push(i as u32);
        }
        Self { shell, side, cells }
    }

    /// Indices of the shell points within distance `r` of point `i`,
    /// including `i` itself, in increasing order.
    pub fn neighbors(&self, i: usize, r: f64) -> Vec<usize> {
        let p = &self.shell.points()[i];
        let dim = p.dim();
        let reach = (r / self.side).ceil() as i64;
        let home = cell_of(p, self.side);
        let r2 = r * r;
        let mut out = Vec::new();
        let mut offset = [-reach; MAX_DIM];
        loop {
            let mut key = home;
            for k in 0..dim {
                key[k] += offset[k];
            }
            if let Some(ids) = self.cells.get(&key) {
                for &j in ids {
                    let q = &self.shell.points()[j as usize];
                    if (p.dist_sq(q) as f64) <= r2 {
                        out.push(j as usize);
                    }
                }
            }
            // odometer over the (2·reach+1)^dim neighbouring cells
            let mut k = 0;
            loop {
                if k == dim {
                    out.sort_unstable();
                    return out;
                }
                if offset[k] < reach {
                    offset[k] += 1;
                    break;
                }
                offset[k] = -reach;
                k += 1;
            }
        }
    }
}

fn cell_of(p: &LatticePoint, side: f64) -> [i64; MAX_DIM] {
    let mut key = [0i64; MAX_DIM];
    for (k, &c) in p.coords().iter().enumerate() {
        key[k] = (c as f64 / side).floor() as i64;
    }
    key
}

fn sorted_angles(shell: &Shell) -> Vec<f64> {
    let mut angles: Vec<f64> = shell
        .points()
        .iter()
        .map(|p| (p.coords()[1] as f64).atan2(p.coords()[0] as f64))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

fn require_dim(shell: &Shell, dim: usize) -> Result<()> {
    if shell.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: shell.dim(),
        });
    }
    Ok(())
}

/// Largest number of shell points in one cap (or arc) of size `r`.
pub fn max_cap_count(shell: &Shell, r: f64, mode: CapMode) -> Result<usize> {
    if shell.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cap size must be positive, got {r}"
        )));
    }
    let n = shell.len();
    match mode {
        CapMode::Exact2d => {
            require_dim(shell, 2)?;
            let lambda = shell.radius();
            if lambda == 0.0 {
                return Ok(n);
            }
            let width = r / lambda;
            if width >= TAU {
                return Ok(n);
            }
            let angles = sorted_angles(shell);
            let mut best = 0;
            let mut j = 0;
            let at = |k: usize| angles[k % n] + TAU * (k / n) as f64;
            for i in 0..n {
                if j < i {
                    j = i;
                }
                while j + 1 < i + n && at(j + 1) - angles[i] <= width {
                    j += 1;
                }
                best = best.max(j - i + 1);
            }
            Ok(best)
        }
        CapMode::Centered => {
            if r >= 2.0 * shell.radius() {
                return Ok(n);
            }
            let index = ShellIndex::new(shell, r);
            Ok((0..n)
                .map(|i| index.neighbors(i, r).len())
                .max()
                .unwrap_or(0))
        }
    }
}

/// Shortest arc (length on the circle of radius `λ`) holding three points.
pub fn min_enclosing_arc_of_three(shell: &Shell) -> Result<f64> {
    require_dim(shell, 2)?;
    let n = shell.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let angles = sorted_angles(shell);
    let span = (0..n)
        .map(|i| {
            let k = i + 2;
            angles[k % n] + TAU * (k / n) as f64 - angles[i]
        })
        .fold(f64::INFINITY, f64::min);
    Ok(span * shell.radius())
}

/// Connected components of the graph joining points at distance ≤ threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPartition {
    pub groups: Vec<Vec<LatticePoint>>,
    pub threshold: f64,
}

impl ClusterPartition {
    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Single-linkage clustering of the shell at `threshold`.
///
/// Groups are internally sorted and ordered by their smallest member.
pub fn cluster_partition(shell: &Shell, threshold: f64) -> Result<ClusterPartition> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let n = shell.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    if n > 0 {
        let index = ShellIndex::new(shell, threshold.min(2.0 * shell.radius() + 1.0));
        for i in 0..n {
            for j in index.neighbors(i, threshold) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    // Shell points are sorted, so scanning in order visits each component
    // first at its smallest member.
    let mut slot: HashMap<usize, usize> = HashMap::new();
    let mut groups: Vec<Vec<LatticePoint>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(shell.points()[i]);
    }
    Ok(ClusterPartition { groups, threshold })
}

/// Whether the affine span of the points has dimension at most 2 (d = 3).
pub fn coplanarity_check(points: &[LatticePoint]) -> Result<bool> {
    let Some(first) = points.first() else {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    };
    if let Some(p) = points.iter().find(|p| p.dim() != 3) {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: p.dim(),
        });
    }
    let diff = |p: &LatticePoint| -> [i128; 3] {
        let (a, b) = (p.coords(), first.coords());
        [
            (a[0] - b[0]) as i128,
            (a[1] - b[1]) as i128,
            (a[2] - b[2]) as i128,
        ]
    };
    let cross = |u: [i128; 3], v: [i128; 3]| {
        [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ]
    };
    let diffs: Vec<[i128; 3]> = points[1..].iter().map(diff).collect();
    let Some(&u) = diffs.iter().find(|v| **v != [0, 0, 0]) else {
        return Ok(true);
    };
    let Some(normal) = diffs
        .iter()
        .map(|&v| cross(u, v))
        .find(|c| *c != [0, 0, 0])
    else {
        // all points collinear
        return Ok(true);
    };
    Ok(diffs
        .iter()
        .all(|v| v[0] * normal[0] + v[1] * normal[1] + v[2] * normal[2] == 0))
}

/// First shell point whose centred cap of chordal radius `r` holds a
/// non-coplanar set of shell points (d = 3), or `None`.
pub fn small_cap_coplanarity_counterexample(shell: &Shell, r: f64) -> Result<Option<LatticePoint>> {
    require_dim(shell, 3)?;
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cap size must be positive, got {r}"
        )));
    }
    let index = ShellIndex::new(shell, r);
    for i in 0..shell.len() {
        let ids = index.neighbors(i, r);
        if ids.len() < 4 {
            continue;
        }
        let members: Vec<LatticePoint> = ids.iter().map(|&j| shell.points()[j]).collect();
        if !coplanarity_check(&members)? {
            return Ok(Some(shell.points()[i]));
        }
    }
    Ok(None)
}

/// Counts of shell points per half-open cube `[k·s, (k+1)·s)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellHistogram {
    pub cell_side: f64,
    pub counts: BTreeMap<Vec<i64>, u64>,
}

impl CellHistogram {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

pub fn cell_histogram(shell: &Shell, cell_side: f64) -> Result<CellHistogram> {
    if !(cell_side > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cell side must be positive, got {cell_side}"
        )));
    }
    let mut counts = BTreeMap::new();
    for p in shell.points() {
        let key: Vec<i64> = p
            .coords()
            .iter()
            .map(|&c| (c as f64 / cell_side).floor() as i64)
            .collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(CellHistogram { cell_side, counts })
}

/// `Σ_α N_α²` over the non-empty cells.
pub fn mean_square_statistic(hist: &CellHistogram) -> u64 {
    hist.counts.values().map(|n| n * n).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_shell::{enumerate_shell, ShellSpec};

    fn shell(dim: usize, m: u64) -> Shell {
        enumerate_shell(ShellSpec::new(dim, m).unwrap()).unwrap()
    }

    fn lp(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c).unwrap()
    }

    #[test]
    fn exact_arcs_on_radius_five() {
        let s = shell(2, 25);
        let lambda = 5.0;
        assert_eq!(max_cap_count(&s, TAU * lambda, CapMode::Exact2d).unwrap(), 12);
        assert_eq!(max_cap_count(&s, 1.0, CapMode::Exact2d).unwrap(), 1);
        assert_eq!(max_cap_count(&s, 1.5, CapMode::Exact2d).unwrap(), 2);
        // the (3,4)-(4,3) arc
        let arc = lambda * ((4f64).atan2(3.0) - (3f64).atan2(4.0));
        assert!((arc - 1.4190).abs() < 1e-4);
    }

    #[test]
    fn exact_mode_requires_plane() {
        assert!(matches!(
            max_cap_count(&shell(3, 2), 1.0, CapMode::Exact2d),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn centered_counts() {
        let s = shell(2, 25);
        assert_eq!(max_cap_count(&s, 1.5, CapMode::Centered).unwrap(), 2);
        assert_eq!(max_cap_count(&s, 0.5, CapMode::Centered).unwrap(), 1);
        assert_eq!(max_cap_count(&s, 10.0, CapMode::Centered).unwrap(), 12);
        let s = shell(3, 1);
        assert_eq!(max_cap_count(&s, 1.5, CapMode::Centered).unwrap(), 5);
    }

    #[test]
    fn three_point_arcs() {
        let s = shell(2, 25);
        let arc = min_enclosing_arc_of_three(&s).unwrap();
        assert!((arc - 5.0 * (4f64).atan2(3.0)).abs() < 1e-12);
        assert!((arc - 4.6365).abs() < 1e-4);
        // four axis points: three of them always span a half circle
        for m in [1u64, 4, 9, 49] {
            let s = shell(2, m);
            assert_eq!(s.len(), 4);
            let arc = min_enclosing_arc_of_three(&s).unwrap();
            assert!((arc - std::f64::consts::PI * (m as f64).sqrt()).abs() < 1e-12);
        }
        let s = shell(2, 2);
        let arc = min_enclosing_arc_of_three(&s).unwrap();
        assert!((arc - std::f64::consts::PI * 2f64.sqrt()).abs() < 1e-12);
        assert!(min_enclosing_arc_of_three(&shell(2, 0)).is_err());
    }

    #[test]
    fn partition_examples() {
        let s = shell(2, 25);
        let p = cluster_partition(&s, 0.9).unwrap();
        assert_eq!(p.groups.len(), 12);
        let p = cluster_partition(&s, 10.0).unwrap();
        assert_eq!(p.groups.len(), 1);
        let p = cluster_partition(&s, 2.0).unwrap();
        assert_eq!(p.groups.len(), 8);
        assert!(p.groups.contains(&vec![lp(&[3, 4]), lp(&[4, 3])]));
        assert_eq!(p.groups[0][0], lp(&[-5, 0]));
        let firsts: Vec<_> = p.groups.iter().map(|g| g[0]).collect();
        let mut sorted = firsts.clone();
        sorted.sort();
        assert_eq!(firsts, sorted);
    }

    #[test]
    fn coplanarity() {
        assert!(coplanarity_check(&[lp(&[1, 2, 3])]).unwrap());
        assert!(coplanarity_check(&[lp(&[1, 2, 3]), lp(&[0, 0, 1]), lp(&[5, 5, 5])]).unwrap());
        let tetra = [
            lp(&[1, 0, 0]),
            lp(&[0, 1, 0]),
            lp(&[0, 0, 1]),
            lp(&[1, 1, 1]),
        ];
        assert!(!coplanarity_check(&tetra).unwrap());
        assert!(!coplanarity_check(shell(3, 1).points()).unwrap());
        // the square {(±1,±1,0)} is planar
        let sq = [lp(&[1, 1, 0]), lp(&[1, -1, 0]), lp(&[-1, 1, 0]), lp(&[-1, -1, 0])];
        assert!(coplanarity_check(&sq).unwrap());
        assert!(coplanarity_check(&[lp(&[1, 0])]).is_err());
        assert!(coplanarity_check(&[]).is_err());
    }

    #[test]
    fn histogram_partition_identity() {
        let s = shell(3, 100);
        let side = 10f64.sqrt();
        let h = cell_histogram(&s, side).unwrap();
        assert_eq!(h.total(), s.len() as u64);
        // direct binning
        let mut direct: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
        for p in s.points() {
            let key = p
                .coords()
                .iter()
                .map(|&c| {
                    let mut k = (c as f64 / side) as i64;
                    if (k as f64) * side > c as f64 {
                        k -= 1;
                    }
                    k
                })
                .collect();
            *direct.entry(key).or_default() += 1;
        }
        assert_eq!(h.counts, direct);

        let big = cell_histogram(&s, 25.0).unwrap();
        assert!(big.counts.len() <= 8);
        assert!(big.counts.keys().all(|k| k.iter().all(|&c| c == 0 || c == -1)));
    }

    #[test]
    fn mean_square_extremes() {
        let s = shell(3, 50);
        let fine = cell_histogram(&s, 0.5).unwrap();
        assert_eq!(mean_square_statistic(&fine), s.len() as u64);
        let mut one = BTreeMap::new();
        one.insert(vec![0, 0, 0], s.len() as u64);
        let h = CellHistogram {
            cell_side: 1.0,
            counts: one,
        };
        assert_eq!(mean_square_statistic(&h), (s.len() * s.len()) as u64);
    }

    #[test]
    fn cap_geometry() {
        assert!(Cap::new(vec![1.0, 1.0], 1.0).is_err());
        assert!(Cap::new(vec![1.0, 0.0], 0.0).is_err());
        let s = shell(2, 25);
        let cap = Cap::new(vec![1.0, 0.0], 3.2).unwrap();
        let members = cap.members(&s).unwrap();
        assert_eq!(members, vec![lp(&[4, -3]), lp(&[4, 3]), lp(&[5, 0])]);
        let a = Cap::new(vec![1.0, 0.0], 1.0).unwrap();
        let b = Cap::new(vec![-1.0, 0.0], 1.0).unwrap();
        assert!((a.gap(&b, 5.0) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn small_caps_are_planar() {
        // points of the m = 2 shell are at least √2 apart
        let s = shell(3, 2);
        assert_eq!(small_cap_coplanarity_counterexample(&s, 1.0).unwrap(), None);
        // a cap reaching across the whole shell is not planar
        let far = small_cap_coplanarity_counterexample(&s, 3.0).unwrap();
        assert_eq!(far, Some(s.points()[0]));
        assert!(small_cap_coplanarity_counterexample(&shell(2, 25), 1.0).is_err());
    }
}
