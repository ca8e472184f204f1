//! Exponential sums: bilinear sums over separated sets, the cap-pair double
//! sum with support-function phase, and power-law fits.

mod bilinear;

pub use bilinear::{
    bilinear_sum, bilinear_sum_unchecked, bilinear_sum_with_phase, separated_set, BilinearPhase,
    SeparatedSet, SetPattern,
};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cap_stats::Cap;
use crate::error::{Error, Result};
use crate::lattice_shell::{enumerate_shell, Shell, ShellSpec};
use crate::numeric::{e, ComplexKahanSum};
use crate::restriction::{random_coefficients, CoefficientVector};
use crate::surface::Hypersurface;

/// Default lower bound on `λ·|c_A − c_B| / r` for [`CapPair`].
pub const DEFAULT_CAP_SEPARATION: f64 = 10.0;

/// Floor applied to magnitudes before taking logs in [`exponent_fit`].
pub const DEFAULT_MAGNITUDE_FLOOR: f64 = 1e-30;

/// One measured sum against its sweep parameter (β or λ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRecord {
    pub parameter: f64,
    pub magnitude: f64,
    pub trivial_bound: f64,
    /// `magnitude / parameter^p` for the reference power `p` of the sweep.
    pub normalized: f64,
}

/// Two caps on the sphere of radius `λ` whose centres are at least
/// `separation · r` apart (`r` the larger cap size).
#[derive(Debug, Clone, PartialEq)]
pub struct CapPair {
    pub a: Cap,
    pub b: Cap,
}

impl CapPair {
    pub fn new(a: Cap, b: Cap, lambda: f64, separation: f64) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: b.dim(),
            });
        }
        let dist = lambda
            * a.center()
                .iter()
                .zip(b.center())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
        let need = separation * a.size_r().max(b.size_r());
        if dist < need * (1.0 - 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "cap centres are {dist:.6} apart, need at least {need:.6}"
            )));
        }
        Ok(Self { a, b })
    }
}

/// `Σ_{n ∈ A∩E} Σ_{n′ ∈ B∩E} φ̂(n)·conj(φ̂(n′))·e(h(n − n′))`, with `h` the
/// support function of the surface. Zero when either cap holds no shell
/// point.
pub fn cap_pair_sum(
    shell: &Shell,
    surface: &Hypersurface,
    cap_a: &Cap,
    cap_b: &Cap,
    coeffs: &CoefficientVector,
) -> Result<Complex64> {
    Ok(cap_pair_terms(shell, surface, cap_a, cap_b, coeffs)?.0)
}

/// The sum and its triangle-inequality bound `Σ|φ̂(n)|·Σ|φ̂(n′)|`.
fn cap_pair_terms(
    shell: &Shell,
    surface: &Hypersurface,
    cap_a: &Cap,
    cap_b: &Cap,
    coeffs: &CoefficientVector,
) -> Result<(Complex64, f64)> {
    if surface.dim() != shell.dim() {
        return Err(Error::DimensionMismatch {
            expected: shell.dim(),
            got: surface.dim(),
        });
    }
    if let Some(p) = coeffs.entries().keys().find(|p| !shell.contains(p)) {
        if p.dim() != shell.dim() {
            return Err(Error::DimensionMismatch {
                expected: shell.dim(),
                got: p.dim(),
            });
        }
        return Err(Error::InvalidArgument(format!(
            "coefficient at {p:?} is off the shell"
        )));
    }
    let in_a = cap_a.members(shell)?;
    let in_b = cap_b.members(shell)?;
    let rows: Vec<Result<Complex64>> = in_a
        .par_iter()
        .map(|n| {
            let an = coeffs.get(n);
            let mut acc = ComplexKahanSum::default();
            if an.norm_sqr() == 0.0 {
                return Ok(acc.value());
            }
            for np in &in_b {
                let bn = coeffs.get(np);
                if bn.norm_sqr() == 0.0 {
                    continue;
                }
                let h = surface.support_function(&n.diff_f64(np))?;
                acc.add(an * bn.conj() * e(h));
            }
            Ok(acc.value())
        })
        .collect();
    let mut total = ComplexKahanSum::default();
    for r in rows {
        total.add(r?);
    }
    let mass = |pts: &[_]| pts.iter().map(|p| coeffs.get(p).norm()).sum::<f64>();
    Ok((total.value(), mass(&in_a) * mass(&in_b)))
}

/// `|cap_pair_sum|` for each `m`, with caps of size `λ·cap_fraction` centred
/// at the shell point nearest `direction` and its antipode, and a random
/// unit coefficient vector on the two caps (seeded by `seed` and `m`).
/// Records are normalized by `λ`; empty shells are skipped.
pub fn cap_pair_sweep(
    surface: &Hypersurface,
    m_list: &[u64],
    cap_fraction: f64,
    direction: &[f64],
    separation: f64,
    seed: u64,
) -> Result<Vec<SumRecord>> {
    let dim = surface.dim();
    if direction.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: direction.len(),
        });
    }
    let recs: Vec<Option<SumRecord>> = m_list
        .par_iter()
        .map(|&m| {
            let shell = enumerate_shell(ShellSpec::new(dim, m)?)?;
            if shell.is_empty() {
                log::warn!("m = {m}: empty shell in dimension {dim}, skipped");
                return Ok(None);
            }
            let lambda = shell.radius();
            let anchor = shell
                .points()
                .iter()
                .max_by(|p, q| {
                    let s = |x: &crate::lattice_shell::LatticePoint| {
                        crate::numeric::dot(&x.to_f64(), direction)
                    };
                    s(p).total_cmp(&s(q)).then(q.cmp(p))
                })
                .copied()
                .expect("non-empty shell");
            let r = cap_fraction * lambda;
            let a = Cap::around(&anchor, r)?;
            let b = Cap::new(a.center().iter().map(|c| -c).collect(), r)?;
            let pair = CapPair::new(a, b, lambda, separation)?;
            let mut support = pair.a.members(&shell)?;
            support.extend(pair.b.members(&shell)?);
            support.sort();
            support.dedup();
            let coeffs = random_coefficients(&support, seed ^ m.wrapping_mul(0x9E37_79B9_7F4A_7C15))?;
            let (sum, bound) = cap_pair_terms(&shell, surface, &pair.a, &pair.b, &coeffs)?;
            let magnitude = sum.norm();
            Ok(Some(SumRecord {
                parameter: lambda,
                magnitude,
                trivial_bound: bound,
                normalized: magnitude / lambda,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(recs.into_iter().flatten().collect())
}

/// Bilinear sum as a record, normalized by `β^reference_power`.
pub fn bilinear_record(
    beta: f64,
    xs: &SeparatedSet,
    ys: &SeparatedSet,
    phase: BilinearPhase,
    reference_power: f64,
) -> Result<SumRecord> {
    let magnitude = bilinear_sum_with_phase(beta, xs, ys, phase)?.norm();
    Ok(SumRecord {
        parameter: beta,
        magnitude,
        trivial_bound: (xs.len() * ys.len()) as f64,
        normalized: magnitude / beta.powf(reference_power),
    })
}

/// Least-squares line through `(log parameter, log magnitude)`.
///
/// Returns `(slope, intercept, rms residual)`.
pub fn exponent_fit(records: &[SumRecord]) -> Result<(f64, f64, f64)> {
    exponent_fit_with_floor(records, DEFAULT_MAGNITUDE_FLOOR)
}

pub fn exponent_fit_with_floor(records: &[SumRecord], floor: f64) -> Result<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.parameter > 0.0 && r.parameter.is_finite() && r.magnitude.is_finite())
        .map(|r| (r.parameter.ln(), r.magnitude.max(floor).ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 usable records, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-24 * n {
        return Err(Error::DegenerateFit("parameters are not distinct".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, intercept, rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_shell::LatticePoint;
    use rand::{Rng, SeedableRng};

    fn rec(p: f64, m: f64) -> SumRecord {
        SumRecord {
            parameter: p,
            magnitude: m,
            trivial_bound: m,
            normalized: m,
        }
    }

    #[test]
    fn fit_exact_power_laws() {
        let sq: Vec<_> = (1..=6).map(|k| rec(k as f64, (k * k) as f64)).collect();
        let (s, _, r) = exponent_fit(&sq).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && r < 1e-12);
        let flat: Vec<_> = (1..=6).map(|k| rec(k as f64 * 10.0, 3.0)).collect();
        assert!(exponent_fit(&flat).unwrap().0.abs() < 1e-12);
    }

    #[test]
    fn fit_noisy_power_law() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let recs: Vec<_> = (0..40)
            .map(|k| {
                let p = 10f64.powf(2.0 + k as f64 / 10.0);
                let noise = 1.0 + 0.01 * rng.random_range(-1.0..1.0);
                rec(p, 5.0 * p.powf(0.75) * noise)
            })
            .collect();
        assert!((exponent_fit(&recs).unwrap().0 - 0.75).abs() < 0.05);
    }

    #[test]
    fn fit_degenerate_inputs() {
        assert!(exponent_fit(&[rec(1.0, 1.0), rec(2.0, 2.0)]).is_err());
        assert!(exponent_fit(&[rec(2.0, 1.0), rec(2.0, 2.0), rec(2.0, 3.0)]).is_err());
        // zero magnitudes are floored, not dropped
        let (s, _, _) = exponent_fit(&[rec(1.0, 0.0), rec(2.0, 0.0), rec(4.0, 0.0)]).unwrap();
        assert!(s.abs() < 1e-12);
    }

    fn sphere() -> Hypersurface {
        Hypersurface::sphere(0.25, [0.5, 0.5, 0.5]).unwrap()
    }

    #[test]
    fn cap_pair_trivial_cases() {
        let shell = enumerate_shell(ShellSpec::new(3, 9).unwrap()).unwrap();
        let s = sphere();
        let n = LatticePoint::new(&[3, 0, 0]).unwrap();
        let np = LatticePoint::new(&[-3, 0, 0]).unwrap();
        let a = Cap::around(&n, 0.5).unwrap();
        let b = Cap::around(&np, 0.5).unwrap();
        let coeffs = CoefficientVector::from_pairs([
            (n, Complex64::new(0.6, 0.0)),
            (np, Complex64::new(0.0, 0.8)),
        ]);
        let v = cap_pair_sum(&shell, &s, &a, &b, &coeffs).unwrap();
        assert!((v.norm() - 0.48).abs() < 1e-15);

        // a cap between lattice points holds nothing
        let empty = Cap::new(vec![(1.0f64 / 3.0).sqrt(); 3], 0.1).unwrap();
        assert_eq!(cap_pair_sum(&shell, &s, &empty, &b, &coeffs).unwrap(), Complex64::default());

        let off = CoefficientVector::from_pairs([(
            LatticePoint::new(&[1, 0, 0]).unwrap(),
            Complex64::new(1.0, 0.0),
        )]);
        assert!(cap_pair_sum(&shell, &s, &a, &b, &off).is_err());
        let flat = Hypersurface::circle(0.25, [0.5, 0.5]).unwrap();
        assert!(cap_pair_sum(&shell, &flat, &a, &b, &coeffs).is_err());
    }

    #[test]
    fn cap_pair_matches_direct_double_loop() {
        let m = 10_001; // ≡ 1 mod 8
        let shell = enumerate_shell(ShellSpec::new(3, m).unwrap()).unwrap();
        let lambda = shell.radius();
        let s = sphere();
        let recs = cap_pair_sweep(&s, &[m], 0.25, &[0.3, 0.5, 0.8], 8.0, 5).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].magnitude <= recs[0].trivial_bound * (1.0 + 1e-12));

        // direct oracle on an independent pair of caps
        let p = shell.points()[shell.len() / 3];
        let a = Cap::around(&p, lambda / 4.0).unwrap();
        let b = Cap::new(a.center().iter().map(|c| -c).collect(), lambda / 4.0).unwrap();
        let support: Vec<_> = shell
            .points()
            .iter()
            .filter(|q| a.contains(q, lambda) || b.contains(q, lambda))
            .copied()
            .collect();
        let coeffs = random_coefficients(&support, 9).unwrap();
        let mut oracle = Complex64::default();
        for n in shell.points().iter().filter(|q| a.contains(q, lambda)) {
            for np in shell.points().iter().filter(|q| b.contains(q, lambda)) {
                let xi = n.diff_f64(np);
                // h(ξ) = ξ·c + ρ|ξ| for the round sphere
                let h = xi.iter().sum::<f64>() * 0.5
                    + 0.25 * xi.iter().map(|x| x * x).sum::<f64>().sqrt();
                oracle += coeffs.get(n) * coeffs.get(np).conj() * e(h);
            }
        }
        let v = cap_pair_sum(&shell, &s, &a, &b, &coeffs).unwrap();
        assert!((v - oracle).norm() < 1e-9 * oracle.norm().max(1.0));
    }

    #[test]
    fn cap_separation_check() {
        let a = Cap::new(vec![1.0, 0.0, 0.0], 10.0).unwrap();
        let b = Cap::new(vec![-1.0, 0.0, 0.0], 10.0).unwrap();
        // r = λ/4 puts antipodal centres 8r apart
        assert!(CapPair::new(a.clone(), b.clone(), 40.0, DEFAULT_CAP_SEPARATION).is_err());
        assert!(CapPair::new(a, b, 40.0, 8.0).is_ok());
    }
}
