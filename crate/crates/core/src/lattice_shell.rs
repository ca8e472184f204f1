//! Exact enumeration of the integer points on a sphere `x₁² + … + x_d² = m`.
//!
//! Everything here is indexed by the norm-square `m = λ²`, never by the
//! radius, so all membership tests are exact integer arithmetic.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 5;

/// Default cap on the number of points a single enumeration may produce.
pub const DEFAULT_POINT_BUDGET: u64 = 10_000_000;

/// Dimension and norm-square of a lattice shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShellSpec {
    dim: usize,
    m: u64,
}

impl ShellSpec {
    pub fn new(dim: usize, m: u64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidShell(format!(
                "dimension {dim} outside 2..={MAX_DIM}"
            )));
        }
        Ok(Self { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// The radius `λ = √m`.
    pub fn radius(&self) -> f64 {
        (self.m as f64).sqrt()
    }
}

/// An integer vector of length `dim ≤ MAX_DIM`.
///
/// Unused trailing slots are always zero, so equality and hashing only
/// see the meaningful coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticePoint {
    coords: [i64; MAX_DIM],
    dim: u8,
}

impl LatticePoint {
    pub fn new(coords: &[i64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "lattice point needs 1..={MAX_DIM} coordinates, got {}",
                coords.len()
            )));
        }
        let mut buf = [0; MAX_DIM];
        buf[..coords.len()].copy_from_slice(coords);
        Ok(Self {
            coords: buf,
            dim: coords.len() as u8,
        })
    }

    fn from_buf(coords: [i64; MAX_DIM], dim: usize) -> Self {
        Self {
            coords,
            dim: dim as u8,
        }
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords[..self.dim as usize]
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn norm_sq(&self) -> i64 {
        self.coords().iter().map(|&c| c * c).sum()
    }

    pub fn dist_sq(&self, other: &Self) -> i64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self.dist_sq(other) as f64).sqrt()
    }

    /// `self - other` as a real frequency vector.
    pub fn diff_f64(&self, other: &Self) -> Vec<f64> {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) as f64)
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords().iter().map(|&c| c as f64).collect()
    }
}

impl Ord for LatticePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.coords()
            .cmp(other.coords())
            .then(self.dim.cmp(&other.dim))
    }
}

impl PartialOrd for LatticePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// All lattice points of one shell, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shell {
    spec: ShellSpec,
    points: Vec<LatticePoint>,
}

impl Shell {
    pub fn spec(&self) -> ShellSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn m(&self) -> u64 {
        self.spec.m
    }

    pub fn radius(&self) -> f64 {
        self.spec.radius()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.points.binary_search(p).is_ok()
    }

    pub fn into_points(self) -> Vec<LatticePoint> {
        self.points
    }

    /// Subset of a shell; `points` must be sorted and lie on `spec`.
    pub(crate) fn from_sorted_points(spec: ShellSpec, points: Vec<LatticePoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        Self { spec, points }
    }
}

/// Enumerates the shell with the default point budget.
pub fn enumerate_shell(spec: ShellSpec) -> Result<Shell> {
    enumerate_shell_with_budget(spec, DEFAULT_POINT_BUDGET)
}

/// Enumerates every integer solution of `x₁² + … + x_d² = m`.
///
/// Leading coordinates are iterated in increasing order and the last two are
/// found by a perfect-square test, which yields lexicographic order directly.
pub fn enumerate_shell_with_budget(spec: ShellSpec, budget: u64) -> Result<Shell> {
    let mut out = Vec::new();
    let mut prefix = [0i64; MAX_DIM];
    let mut overflow = false;
    fill(
        &mut prefix,
        0,
        spec.dim,
        spec.m,
        &mut |p| {
            if out.len() as u64 >= budget {
                overflow = true;
                return false;
            }
            out.push(p);
            true
        },
    );
    if overflow {
        return Err(Error::Capacity {
            dim: spec.dim,
            m: spec.m,
            count: shell_count(spec),
            budget,
        });
    }
    debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
    Ok(Shell { spec, points: out })
}

// Calls `emit` for each point; stops early when `emit` returns false.
fn fill(
    prefix: &mut [i64; MAX_DIM],
    depth: usize,
    dim: usize,
    rem: u64,
    emit: &mut dyn FnMut(LatticePoint) -> bool,
) -> bool {
    let s = rem.isqrt() as i64;
    if dim - depth == 2 {
        for x in -s..=s {
            let tail = rem - (x * x) as u64;
            let y = tail.isqrt();
            if y * y != tail {
                continue;
            }
            prefix[depth] = x;
            let y = y as i64;
            prefix[depth + 1] = -y;
            if !emit(LatticePoint::from_buf(*prefix, dim)) {
                return false;
            }
            if y > 0 {
                prefix[depth + 1] = y;
                if !emit(LatticePoint::from_buf(*prefix, dim)) {
                    return false;
                }
            }
        }
        prefix[depth] = 0;
        prefix[depth + 1] = 0;
        return true;
    }
    for x in -s..=s {
        prefix[depth] = x;
        if !fill(prefix, depth + 1, dim, rem - (x * x) as u64, emit) {
            return false;
        }
    }
    prefix[depth] = 0;
    true
}

/// Number of points on the shell, without materializing them.
pub fn shell_count(spec: ShellSpec) -> u64 {
    count_rec(spec.dim, spec.m)
}

fn count_rec(dims: usize, rem: u64) -> u64 {
    let s = rem.isqrt();
    if dims == 2 {
        let mut n = 0;
        for x in 0..=s {
            let tail = rem - x * x;
            let y = tail.isqrt();
            if y * y == tail {
                // (±x, ±y) with the zero cases collapsed
                n += match (x == 0, y == 0) {
                    (true, true) => 1,
                    (true, false) | (false, true) => 2,
                    (false, false) => 4,
                };
            }
        }
        return n;
    }
    let mut n = count_rec(dims - 1, rem);
    for x in 1..=s {
        n += 2 * count_rec(dims - 1, rem - x * x);
    }
    n
}

/// `r₂(m)`, the number of representations of `m` as a sum of two squares,
/// from the factorization of `m`: `4·(d₁(m) − d₃(m))`, with `r₂(0) = 1`.
pub fn two_squares_count_oracle(m: u64) -> u64 {
    if m == 0 {
        return 1;
    }
    let mut n = m;
    while n % 2 == 0 {
        n /= 2;
    }
    let mut product = 1u64;
    let mut p = 3u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0u64;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            if p % 4 == 1 {
                product *= e + 1;
            } else if e % 2 == 1 {
                return 0;
            }
        }
        p += 2;
    }
    if n > 1 {
        if n % 4 == 1 {
            product *= 2;
        } else {
            return 0;
        }
    }
    4 * product
}

/// Smallest Euclidean distance between two distinct shell points.
pub fn min_pairwise_distance(shell: &Shell) -> Result<f64> {
    let pts = shell.points();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: pts.len(),
        });
    }
    // Points are sorted by first coordinate, so the scan from each point can
    // stop once that coordinate alone exceeds the best distance so far.
    let mut best = i64::MAX;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            let dx = q.coords()[0] - p.coords()[0];
            if dx * dx >= best {
                break;
            }
            best = best.min(p.dist_sq(q));
        }
    }
    Ok((best as f64).sqrt())
}
