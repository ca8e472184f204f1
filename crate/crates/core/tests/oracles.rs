//! Library results against independent reference computations.

use std::f64::consts::TAU;

use torus_restrict::lattice_shell::{enumerate_shell, LatticePoint, ShellSpec};
use torus_restrict::restriction::{
    direct_restriction_norm_sq, extreme_eigenvalues, gram_matrix, random_coefficients,
    restriction_norm_sq, GramMatrix,
};
use torus_restrict::surface::Hypersurface;
use torus_restrict::Complex64;

/// Cyclic Jacobi on the real symmetric embedding `[[A, −B], [B, A]]` of
/// `G = A + iB`; every eigenvalue of `G` appears twice.
fn jacobi_spectrum(g: &GramMatrix) -> Vec<f64> {
    let n = g.len();
    let size = 2 * n;
    let mut a = vec![vec![0.0f64; size]; size];
    for i in 0..n {
        for j in 0..n {
            let z = g.entries[(i, j)];
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..size)
            .flat_map(|i| (0..size).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..size {
            for q in (p + 1)..size {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..size {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..size {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..size).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest eigenvalue by power iteration with Rayleigh quotients.
fn power_max(g: &GramMatrix, shift: f64) -> f64 {
    let n = g.len();
    let mut v: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(1.0 + 0.1 * k as f64, 0.3 * (k as f64).sin()))
        .collect();
    let mut rq = 0.0;
    for _ in 0..20_000 {
        let w: Vec<Complex64> = (0..n)
            .map(|i| {
                (0..n).map(|j| g.entries[(i, j)] * v[j]).sum::<Complex64>() + v[i] * shift
            })
            .collect();
        let num: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        let den: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        let next = num / den;
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v = w.into_iter().map(|z| z / norm).collect();
        if (next - rq).abs() < 1e-15 * next.abs().max(1.0) {
            rq = next;
            break;
        }
        rq = next;
    }
    rq - shift
}

fn negated(g: &GramMatrix) -> GramMatrix {
    GramMatrix {
        index: g.index.clone(),
        entries: g.entries.map(|z| -z),
        tol: g.tol,
    }
}

fn shell(d: usize, m: u64) -> Vec<LatticePoint> {
    enumerate_shell(ShellSpec::new(d, m).unwrap())
        .unwrap()
        .into_points()
}

fn grams() -> Vec<GramMatrix> {
    let circle = Hypersurface::circle(0.25, [0.5, 0.5]).unwrap();
    let ellipse = Hypersurface::ellipse(0.3, 0.2, [0.45, 0.5]).unwrap();
    let sphere = Hypersurface::sphere(0.25, [0.5, 0.5, 0.5]).unwrap();
    let ellipsoid = Hypersurface::ellipsoid(0.3, 0.25, 0.2, [0.5, 0.5, 0.5]).unwrap();
    vec![
        gram_matrix(&shell(2, 25), &circle, 1e-12).unwrap(),
        gram_matrix(&shell(2, 325), &circle, 1e-12).unwrap(),
        gram_matrix(&shell(2, 65), &ellipse, 1e-12).unwrap(),
        gram_matrix(&shell(3, 9), &sphere, 1e-12).unwrap(),
        gram_matrix(&shell(3, 6), &ellipsoid, 1e-12).unwrap(),
    ]
}

#[test]
fn extreme_eigenvalues_match_jacobi() {
    for g in grams() {
        let (lo, hi) = extreme_eigenvalues(&g).unwrap();
        let spec = jacobi_spectrum(&g);
        let (jlo, jhi) = (spec[0], spec[spec.len() - 1]);
        assert!((lo - jlo).abs() < 1e-10, "n={} {lo} vs {jlo}", g.len());
        assert!((hi - jhi).abs() < 1e-10, "n={} {hi} vs {jhi}", g.len());
        // embedding doubles every eigenvalue
        assert!((spec[0] - spec[1]).abs() < 1e-9);
        assert!(lo > -1e-10, "Gram of a positive measure is PSD");
    }
}

#[test]
fn extreme_eigenvalues_match_power_iteration() {
    for g in grams() {
        let (lo, hi) = extreme_eigenvalues(&g).unwrap();
        let shift = 1.0 + g.len() as f64;
        assert!((power_max(&g, shift) - hi).abs() < 1e-7);
        assert!((-power_max(&negated(&g), shift) - lo).abs() < 1e-7);
    }
}

#[test]
fn m25_gram_is_positive_semidefinite() {
    let g = &grams()[0];
    assert_eq!(g.len(), 12);
    assert!(jacobi_spectrum(g).iter().all(|&v| v > -1e-12));
}

#[test]
fn restriction_identity_on_non_round_surfaces() {
    let ellipse = Hypersurface::ellipse(0.3, 0.2, [0.45, 0.5]).unwrap();
    let ellipsoid = Hypersurface::ellipsoid(0.3, 0.25, 0.2, [0.5, 0.5, 0.5]).unwrap();
    for (surface, pts) in [(&ellipse, shell(2, 325)), (&ellipsoid, shell(3, 11))] {
        let g = gram_matrix(&pts, surface, 1e-12).unwrap();
        for seed in 0..5 {
            let v = random_coefficients(&pts, seed).unwrap();
            let q = restriction_norm_sq(&v, &g).unwrap();
            let direct = direct_restriction_norm_sq(&v, surface, 1e-11).unwrap();
            assert!((q - direct).abs() < 1e-8, "{q} vs {direct}");
        }
    }
}

// Brute-force σ̂ for an ellipse: arc-length-weighted trapezoid on a fixed
// fine grid, independent of the adaptive rule in the library.
fn ellipse_sigma_brute(a: f64, b: f64, c: [f64; 2], xi: [f64; 2]) -> Complex64 {
    let n = 1 << 16;
    let (mut sum, mut total) = (Complex64::default(), 0.0);
    for k in 0..n {
        let t = TAU * k as f64 / n as f64;
        let (s, co) = t.sin_cos();
        let w = (a * a * s * s + b * b * co * co).sqrt();
        let x = [c[0] + a * co, c[1] + b * s];
        let phase = -TAU * (xi[0] * x[0] + xi[1] * x[1]);
        sum += Complex64::from_polar(w, phase);
        total += w;
    }
    sum / total
}

#[test]
fn ellipse_transform_matches_brute_force() {
    let s = Hypersurface::ellipse(0.3, 0.2, [0.45, 0.5]).unwrap();
    for xi in [[1.0, 0.0], [3.0, -4.0], [25.0, 17.0], [-120.0, 65.0]] {
        let got = s.sigma_hat(&xi, 1e-12).unwrap().value;
        let want = ellipse_sigma_brute(0.3, 0.2, [0.45, 0.5], xi);
        assert!((got - want).norm() < 1e-10, "ξ={xi:?}: {got} vs {want}");
    }
}

// Spheroid with a = b: along the symmetry axis, with t = cos θ, the
// transform is ∫ e(−ξ(0.5 + c t))·√(a²t² + c²(1 − t²)) dt over [−1, 1],
// normalized; composite Simpson on a fine grid.
#[test]
fn spheroid_axis_transform_matches_one_dimensional_integral() {
    let (a, c) = (0.3, 0.2);
    let s = Hypersurface::ellipsoid(a, a, c, [0.5, 0.5, 0.5]).unwrap();
    for k in [1.0, 7.0, 30.0] {
        let got = s.sigma_hat(&[0.0, 0.0, k], 1e-12).unwrap().value;
        let n = 100_000;
        let h = 2.0 / n as f64;
        let (mut sum, mut total) = (Complex64::default(), 0.0);
        for j in 0..=n {
            let t = -1.0 + j as f64 * h;
            let simpson = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
            let w = simpson * (a * a * t * t + c * c * (1.0 - t * t)).sqrt();
            sum += Complex64::from_polar(w, -TAU * k * (0.5 + c * t));
            total += w;
        }
        let want = sum / total;
        assert!((got - want).norm() < 1e-10, "k={k}: {got} vs {want}");
    }
}
