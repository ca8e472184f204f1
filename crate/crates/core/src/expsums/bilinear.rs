//! Bilinear sums `Σ_{x∈X} Σ_{y∈Y} e(βxy + β^{1/3}x²y²)` over separated sets.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{e, ComplexKahanSum};

/// A finite subset of `[0, 1]` whose consecutive gaps exceed `β^{-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatedSet {
    beta: f64,
    points: Vec<f64>,
}

impl SeparatedSet {
    pub fn new(beta: f64, mut points: Vec<f64>) -> Result<Self> {
        check_beta(beta)?;
        if points.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidArgument("points must lie in [0, 1]".into()));
        }
        points.sort_by(f64::total_cmp);
        let gap = beta.powf(-0.5);
        if let Some(w) = points.windows(2).find(|w| w[1] - w[0] <= gap) {
            return Err(Error::InvalidArgument(format!(
                "gap {} between {} and {} is not above {gap}",
                w[1] - w[0],
                w[0],
                w[1]
            )));
        }
        Ok(Self { beta, points })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("β must be ≥ 1, got {beta}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SetPattern {
    /// `{i/k : 0 ≤ i ≤ k}` for the largest `k < √β`.
    MaximalGrid,
    /// Uniform samples inserted greedily, rejecting those that would break
    /// the gap, until a long run of rejections.
    RandomGreedy,
    /// Grid of step `1/k`, `k < √β/2`, each point moved by up to a quarter
    /// of the step.
    PerturbedGrid,
}

impl SetPattern {
    pub const ALL: [SetPattern; 3] = [Self::MaximalGrid, Self::RandomGreedy, Self::PerturbedGrid];

    pub fn name(&self) -> &'static str {
        match self {
            Self::MaximalGrid => "maximal_grid",
            Self::RandomGreedy => "random_greedy",
            Self::PerturbedGrid => "perturbed_grid",
        }
    }
}

impl std::str::FromStr for SetPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown set pattern '{s}'")))
    }
}

/// Largest integer `k` with `k < bound` (0 when `bound ≤ 1`).
fn largest_below(bound: f64) -> u64 {
    let mut k = bound.ceil() as u64;
    while k > 0 && k as f64 >= bound {
        k -= 1;
    }
    k
}

fn grid(k: u64) -> Vec<f64> {
    if k == 0 {
        return vec![0.0];
    }
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

/// A separated set for `β` following `pattern`; deterministic in `seed`
/// (the maximal grid ignores it).
pub fn separated_set(beta: f64, pattern: SetPattern, seed: u64) -> Result<SeparatedSet> {
    check_beta(beta)?;
    let gap = beta.powf(-0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = match pattern {
        SetPattern::MaximalGrid => grid(largest_below(beta.sqrt())),
        SetPattern::RandomGreedy => {
            let patience = 1000usize.max(20 * beta.sqrt().ceil() as usize);
            let mut pts: Vec<f64> = Vec::new();
            let mut misses = 0;
            while misses < patience {
                let x: f64 = rng.random();
                let at = pts.partition_point(|&p| p < x);
                let left_ok = at == 0 || x - pts[at - 1] > gap;
                let right_ok = at == pts.len() || pts[at] - x > gap;
                if left_ok && right_ok {
                    pts.insert(at, x);
                    misses = 0;
                } else {
                    misses += 1;
                }
            }
            pts
        }
        SetPattern::PerturbedGrid => {
            let k = largest_below(beta.sqrt() / 2.0);
            let step = if k == 0 { 1.0 } else { 1.0 / k as f64 };
            grid(k)
                .into_iter()
                .map(|x| {
                    let jitter = rng.random_range(-0.25..=0.25) * step;
                    (x + jitter).clamp(0.0, 1.0)
                })
                .collect()
        }
    };
    SeparatedSet::new(beta, points)
}

/// Which phase a bilinear sum uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BilinearPhase {
    /// `βxy + β^{1/3}x²y²`.
    Full,
    /// `βxy` only.
    Linear,
}

/// `Σ_{x∈X} Σ_{y∈Y} e(βxy + β^{1/3}x²y²)`.
pub fn bilinear_sum(beta: f64, xs: &SeparatedSet, ys: &SeparatedSet) -> Result<Complex64> {
    bilinear_sum_with_phase(beta, xs, ys, BilinearPhase::Full)
}

pub fn bilinear_sum_with_phase(
    beta: f64,
    xs: &SeparatedSet,
    ys: &SeparatedSet,
    phase: BilinearPhase,
) -> Result<Complex64> {
    for s in [xs, ys] {
        if s.beta() != beta {
            return Err(Error::InvalidArgument(format!(
                "set built for β = {} used with β = {beta}",
                s.beta()
            )));
        }
    }
    Ok(bilinear_sum_unchecked(beta, xs.points(), ys.points(), phase))
}

/// The double sum over arbitrary points, with no separation check.
///
/// Rows are summed in parallel and combined in row order, so the result does
/// not depend on the thread count.
pub fn bilinear_sum_unchecked(
    beta: f64,
    xs: &[f64],
    ys: &[f64],
    phase: BilinearPhase,
) -> Complex64 {
    let quad = match phase {
        BilinearPhase::Full => beta.cbrt(),
        BilinearPhase::Linear => 0.0,
    };
    let rows: Vec<Complex64> = xs
        .par_iter()
        .map(|&x| {
            let bx = TwoFloat::product(beta, x);
            let mut acc = ComplexKahanSum::default();
            for &y in ys {
                let lin = bx.mul(y).frac();
                let q = TwoFloat::product(quad, x * x * y * y).frac();
                acc.add(e(lin + q));
            }
            acc.value()
        })
        .collect();
    let mut total = ComplexKahanSum::default();
    rows.into_iter().for_each(|z| total.add(z));
    total.value()
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct TwoFloat {
    hi: f64,
    lo: f64,
}

impl TwoFloat {
    fn product(a: f64, b: f64) -> Self {
        let hi = a * b;
        Self {
            hi,
            lo: a.mul_add(b, -hi),
        }
    }

    fn mul(self, b: f64) -> Self {
        let hi = self.hi * b;
        let lo = self.hi.mul_add(b, -hi) + self.lo * b;
        let s = hi + lo;
        Self {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    /// Representative of the value mod 1 in `[-1/2, 1/2]`-ish, as one f64.
    fn frac(self) -> f64 {
        (self.hi - self.hi.round()) + self.lo
    }
}
