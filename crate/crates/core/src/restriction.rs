//! The restriction quadratic form.
//!
//! For `φ(x) = Σ_n a_n e(n·x)` with frequencies on one shell,
//!
//! ```text
//! ∫_Σ |φ|² dσ = Σ_{i,j} conj(a_i) a_j ∫ e((n_j − n_i)·x) dσ = v* G v,
//! G_ij = σ̂(n_i − n_j).
//! ```
//!
//! `G` is the Gram matrix of the exponentials in `L²(σ)`, so it is Hermitian
//! and positive semidefinite, and its extreme eigenvalues are the best
//! constants `c²`, `C²` in `c²‖φ‖² ≤ ‖φ‖²_{L²(Σ)} ≤ C²‖φ‖²` for that shell.

use std::collections::{BTreeMap, HashSet};

use log::warn;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::cap_stats::cluster_partition;
use crate::error::{Error, Result};
use crate::lattice_shell::{enumerate_shell, LatticePoint, Shell, ShellSpec};
use crate::numeric::{dot, e, ComplexKahanSum, KahanSum};
use crate::surface::Hypersurface;

/// Relative residual allowed for the extremal eigenpairs.
pub const EIGEN_RESIDUAL: f64 = 1e-8;

/// Default limit on the Gram size used by [`restriction_sweep`].
pub const DEFAULT_GRAM_BUDGET: usize = 3000;

/// Fourier coefficients `φ̂(n)` of a trigonometric polynomial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientVector {
    entries: BTreeMap<LatticePoint, Complex64>,
}

impl CoefficientVector {
    pub fn new(entries: BTreeMap<LatticePoint, Complex64>) -> Self {
        Self { entries }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (LatticePoint, Complex64)>) -> Self {
        Self {
            entries: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, p: &LatticePoint) -> Complex64 {
        self.entries.get(p).copied().unwrap_or_default()
    }

    pub fn entries(&self) -> &BTreeMap<LatticePoint, Complex64> {
        &self.entries
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.values().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() <= 1e-12
    }

    /// Copy restricted to the given points and rescaled to unit norm.
    pub fn restricted_normalized(&self, keep: &[LatticePoint]) -> Result<Self> {
        let mut out: BTreeMap<_, _> = keep
            .iter()
            .filter_map(|p| self.entries.get(p).map(|&z| (*p, z)))
            .collect();
        let n = out.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::InvalidArgument(
                "restriction has zero norm".into(),
            ));
        }
        out.values_mut().for_each(|z| *z /= n);
        Ok(Self { entries: out })
    }

    /// Dense vector in the order of `index`; fails if the support is not
    /// contained in `index`.
    pub fn to_dense(&self, index: &[LatticePoint]) -> Result<DVector<Complex64>> {
        let mut v = DVector::zeros(index.len());
        let mut hits = 0;
        for (i, p) in index.iter().enumerate() {
            if let Some(&z) = self.entries.get(p) {
                v[i] = z;
                hits += 1;
            }
        }
        if hits != self.entries.len() {
            return Err(Error::IndexMismatch);
        }
        Ok(v)
    }
}

/// `G_ij = σ̂(n_i − n_j)` over an ordered frequency list.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub index: Vec<LatticePoint>,
    pub entries: DMatrix<Complex64>,
    pub tol: f64,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Largest `|G_ij − conj(G_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Principal submatrix on the given positions.
    pub fn submatrix(&self, rows: &[usize]) -> GramMatrix {
        let k = rows.len();
        GramMatrix {
            index: rows.iter().map(|&r| self.index[r]).collect(),
            entries: DMatrix::from_fn(k, k, |i, j| self.entries[(rows[i], rows[j])]),
            tol: self.tol,
        }
    }
}

fn check_points(points: &[LatticePoint], dim: usize) -> Result<()> {
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: p.dim(),
        });
    }
    let mut seen = HashSet::with_capacity(points.len());
    if !points.iter().all(|p| seen.insert(*p)) {
        return Err(Error::InvalidArgument("frequencies must be distinct".into()));
    }
    Ok(())
}

/// Assembles the Gram matrix. Entries use the closed form of `σ̂` when the
/// surface has one and quadrature at `tol` otherwise; the upper triangle is
/// computed and mirrored, so the result is exactly Hermitian.
pub fn gram_matrix(
    points: &[LatticePoint],
    surface: &Hypersurface,
    tol: f64,
) -> Result<GramMatrix> {
    check_points(points, surface.dim())?;
    let n = points.len();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    let xi = points[i].diff_f64(&points[j]);
                    surface.sigma_hat_preferred(&xi, tol).map(|s| s.value)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut g = DMatrix::from_element(n, n, Complex64::new(1.0, 0.0));
    for (i, row) in rows.iter().enumerate() {
        for (k, &z) in row.iter().enumerate() {
            let j = i + 1 + k;
            g[(i, j)] = z;
            g[(j, i)] = z.conj();
        }
    }
    Ok(GramMatrix {
        index: points.to_vec(),
        entries: g,
        tol,
    })
}

/// `v* G v` for the coefficient vector laid out on the Gram index.
pub fn restriction_norm_sq(coeffs: &CoefficientVector, gram: &GramMatrix) -> Result<f64> {
    let v = coeffs.to_dense(&gram.index)?;
    let gv = &gram.entries * &v;
    let mut acc = ComplexKahanSum::default();
    for (a, b) in v.iter().zip(gv.iter()) {
        acc.add(a.conj() * b);
    }
    Ok(acc.value().re)
}

/// `∫_Σ |Σ_n φ̂(n) e(n·x)|² dσ(x)` by direct quadrature on the surface,
/// doubling the rule until two levels agree within `tol`.
pub fn direct_restriction_norm_sq(
    coeffs: &CoefficientVector,
    surface: &Hypersurface,
    tol: f64,
) -> Result<f64> {
    DirectQuadrature::new(surface).norm_sq(coeffs, tol)
}

/// Direct quadrature of `|φ|²` over a surface, caching surface rules so that
/// many coefficient vectors can share them.
pub struct DirectQuadrature<'a> {
    surface: &'a Hypersurface,
    rules: std::sync::Mutex<BTreeMap<usize, std::sync::Arc<crate::surface::SurfaceRule>>>,
}

impl<'a> DirectQuadrature<'a> {
    fn max_level(&self) -> usize {
        if self.surface.dim() == 2 {
            1 << 20
        } else {
            1 << 9
        }
    }

    pub fn new(surface: &'a Hypersurface) -> Self {
        Self {
            surface,
            rules: Default::default(),
        }
    }

    fn rule(&self, n: usize) -> std::sync::Arc<crate::surface::SurfaceRule> {
        let mut rules = self.rules.lock().unwrap();
        rules
            .entry(n)
            .or_insert_with(|| std::sync::Arc::new(self.surface.surface_rule(n)))
            .clone()
    }

    pub fn norm_sq(&self, coeffs: &CoefficientVector, tol: f64) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let terms: Vec<(Vec<f64>, Complex64)> = coeffs
            .entries()
            .iter()
            .filter(|(_, z)| z.norm_sqr() > 0.0)
            .map(|(p, &z)| (p.to_f64(), z))
            .collect();
        if terms.is_empty() {
            return Ok(0.0);
        }
        if let Some((p, _)) = terms.iter().find(|(p, _)| p.len() != self.surface.dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.surface.dim(),
                got: p.len(),
            });
        }
        // |φ|² carries frequencies up to twice the largest |n|.
        let band = 2.0
            * terms
                .iter()
                .map(|(p, _)| dot(p, p).sqrt())
                .fold(0.0, f64::max);
        let mut n = self.surface.base_nodes(band);
        let mut coarse = self.integrate(&terms, n);
        loop {
            let fine = self.integrate(&terms, 2 * n);
            let diff = (fine - coarse).abs();
            if diff <= tol {
                return Ok(fine);
            }
            n *= 2;
            if 2 * n > self.max_level() {
                return Err(Error::NonConvergence {
                    tol,
                    achieved: diff,
                    nodes: n,
                });
            }
            coarse = fine;
        }
    }

    fn integrate(&self, terms: &[(Vec<f64>, Complex64)], n: usize) -> f64 {
        let rule = self.rule(n);
        let mut acc = KahanSum::default();
        for k in 0..rule.len() {
            let x = rule.point(k);
            let mut phi = Complex64::default();
            for (p, a) in terms {
                phi += a * e(dot(p, x));
            }
            acc.add(rule.weights[k] * phi.norm_sqr());
        }
        acc.value()
    }
}

/// Smallest and largest eigenvalues of the Hermitian Gram matrix.
///
/// Full Hermitian eigensolve (Householder tridiagonalization and implicit
/// QR); the extremal pairs must satisfy `‖Gv − λv‖ ≤ 1e-8·‖G‖₂`.
pub fn extreme_eigenvalues(gram: &GramMatrix) -> Result<(f64, f64)> {
    if gram.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let defect = gram.hermitian_defect();
    if defect > 2.0 * gram.tol {
        return Err(Error::NotHermitian(defect));
    }
    let eig = gram.entries.clone().symmetric_eigen();
    let (mut lo, mut hi) = (0, 0);
    for (k, &v) in eig.eigenvalues.iter().enumerate() {
        if v < eig.eigenvalues[lo] {
            lo = k;
        }
        if v > eig.eigenvalues[hi] {
            hi = k;
        }
    }
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for k in [lo, hi] {
        let v = eig.eigenvectors.column(k);
        let lambda = Complex64::new(eig.eigenvalues[k], 0.0);
        let residual = (&gram.entries * v - v * lambda).norm();
        if residual > EIGEN_RESIDUAL * scale {
            return Err(Error::EigenResidual {
                residual,
                limit: EIGEN_RESIDUAL * scale,
            });
        }
    }
    Ok((eig.eigenvalues[lo], eig.eigenvalues[hi]))
}

/// One shell's restriction constants and their block certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictionSweepRecord {
    pub m: u64,
    pub shell_size: usize,
    /// Size of the Gram actually solved; smaller than `shell_size` only when
    /// the shell exceeded the Gram budget and a cap sub-Gram was used.
    pub gram_points: usize,
    pub groups: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub offdiag_total: f64,
    pub c_est: f64,
    pub c_upper_est: f64,
}

impl RestrictionSweepRecord {
    /// Whether `[c_est, C_est]` contains `[λ_min, λ_max]`.
    pub fn certificate_holds(&self) -> bool {
        self.c_est <= self.lambda_min && self.lambda_max <= self.c_upper_est
    }
}

/// The two-dimensional cluster argument made checkable.
///
/// Partitions the shell into proximity clusters at `threshold`, takes the
/// extreme eigenvalues of each diagonal block, and bounds the off-block part
/// by its largest absolute row sum
/// `T = max_i Σ_{j ∉ group(i)} |σ̂(n_i − n_j)|`. Weyl's inequality then gives
/// `c_est = min_α λ_min(G_α) − T ≤ λ_min(G)` and
/// `λ_max(G) ≤ max_α λ_max(G_α) + T = C_est`. Both bounds are widened by
/// `16·n·ε·(max_α |λ(G_α)| + T)` to cover floating-point rounding.
pub fn cluster_certificate(
    shell: &Shell,
    surface: &Hypersurface,
    threshold: f64,
    tol: f64,
) -> Result<RestrictionSweepRecord> {
    if shell.dim() != 2 || surface.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: shell.dim().max(surface.dim()),
        });
    }
    block_certificate(shell, shell.points(), surface, threshold, tol)
}

fn block_certificate(
    shell: &Shell,
    points: &[LatticePoint],
    surface: &Hypersurface,
    threshold: f64,
    tol: f64,
) -> Result<RestrictionSweepRecord> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let gram = gram_matrix(points, surface, tol)?;
    let (lambda_min, lambda_max) = extreme_eigenvalues(&gram)?;

    // Cluster on the points actually in the Gram.
    let sub = Shell::from_sorted_points(shell.spec(), points.to_vec());
    let partition = cluster_partition(&sub, threshold)?;
    let position: std::collections::HashMap<LatticePoint, usize> =
        gram.index.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut label = vec![0usize; gram.len()];
    let mut block_min = f64::INFINITY;
    let mut block_max = f64::NEG_INFINITY;
    for (g, group) in partition.groups.iter().enumerate() {
        let rows: Vec<usize> = group.iter().map(|p| position[p]).collect();
        rows.iter().for_each(|&r| label[r] = g);
        let (lo, hi) = extreme_eigenvalues(&gram.submatrix(&rows))?;
        block_min = block_min.min(lo);
        block_max = block_max.max(hi);
    }
    let n = gram.len();
    let offdiag_total = (0..n)
        .map(|i| {
            let mut s = KahanSum::default();
            for j in 0..n {
                if label[j] != label[i] {
                    s.add(gram.entries[(i, j)].norm());
                }
            }
            s.value()
        })
        .fold(0.0, f64::max);
    // The bound can be attained exactly, so leave room for rounding in the
    // block eigenvalues and the row sums.
    let scale = block_min.abs().max(block_max.abs()).max(1.0) + offdiag_total;
    let slack = 16.0 * n as f64 * f64::EPSILON * scale;
    Ok(RestrictionSweepRecord {
        m: shell.m(),
        shell_size: shell.len(),
        gram_points: n,
        groups: partition.groups.len(),
        lambda_min,
        lambda_max,
        offdiag_total,
        c_est: block_min - offdiag_total - slack,
        c_upper_est: block_max + offdiag_total + slack,
    })
}

/// Unit vector with i.i.d. standard complex normal entries before
/// normalization (uniform on the complex unit sphere), reproducible from
/// `seed`.
pub fn random_coefficients(points: &[LatticePoint], seed: u64) -> Result<CoefficientVector> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut seen = HashSet::with_capacity(points.len());
    if !points.iter().all(|p| seen.insert(*p)) {
        return Err(Error::InvalidArgument("frequencies must be distinct".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Complex64> = points
        .iter()
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(CoefficientVector::from_pairs(
        points.iter().copied().zip(raw.into_iter().map(|z| z / norm)),
    ))
}

/// Cluster threshold `2·λ^{1/3}` used by the sweeps.
pub fn default_threshold(m: u64) -> f64 {
    2.0 * (m as f64).powf(1.0 / 6.0)
}

/// Full-Gram extremes plus the cluster certificate at `2λ^{1/3}` for each
/// `m`, in input order. Empty shells are skipped with a warning.
pub fn restriction_sweep(
    surface: &Hypersurface,
    m_list: &[u64],
    tol: f64,
) -> Result<Vec<RestrictionSweepRecord>> {
    restriction_sweep_with_budget(surface, m_list, tol, DEFAULT_GRAM_BUDGET)
}

/// As [`restriction_sweep`], solving at most `gram_budget` frequencies per
/// shell. Larger shells fall back to the sub-Gram of the `gram_budget`
/// points nearest to the first shell point (a cap), flagged by
/// `gram_points < shell_size`.
pub fn restriction_sweep_with_budget(
    surface: &Hypersurface,
    m_list: &[u64],
    tol: f64,
    gram_budget: usize,
) -> Result<Vec<RestrictionSweepRecord>> {
    let dim = surface.dim();
    let results: Vec<Option<RestrictionSweepRecord>> = m_list
        .par_iter()
        .map(|&m| -> Result<Option<RestrictionSweepRecord>> {
            let shell = enumerate_shell(ShellSpec::new(dim, m)?)?;
            if shell.is_empty() {
                warn!("m = {m}: empty shell in dimension {dim}, skipped");
                return Ok(None);
            }
            let points = cap_subset(&shell, gram_budget);
            block_certificate(&shell, &points, surface, default_threshold(m), tol).map(Some)
        })
        .collect::<Result<_>>()?;
    Ok(results.into_iter().flatten().collect())
}

fn cap_subset(shell: &Shell, budget: usize) -> Vec<LatticePoint> {
    if shell.len() <= budget {
        return shell.points().to_vec();
    }
    let anchor = shell.points()[0];
    let mut by_dist: Vec<LatticePoint> = shell.points().to_vec();
    by_dist.sort_by_key(|p| (p.dist_sq(&anchor), *p));
    by_dist.truncate(budget);
    by_dist.sort();
    by_dist
}
