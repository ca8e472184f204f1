//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rayon::prelude::*;

use torus_restrict::cap_stats::{
    cell_histogram, max_cap_count, mean_square_statistic, min_enclosing_arc_of_three,
    small_cap_coplanarity_counterexample, CapMode,
};
use torus_restrict::expsums::{
    bilinear_sum, cap_pair_sweep, exponent_fit, separated_set, SetPattern, SumRecord,
};
use torus_restrict::lattice_shell::{
    enumerate_shell, shell_count, two_squares_count_oracle, ShellSpec,
};
use torus_restrict::restriction::{
    direct_restriction_norm_sq, gram_matrix, random_coefficients, restriction_norm_sq,
    restriction_sweep, RestrictionSweepRecord,
};
use torus_restrict::surface::{quasi_uniform_direction, Hypersurface};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn circle() -> Hypersurface {
    Hypersurface::circle(0.25, [0.5, 0.5]).unwrap()
}

fn sphere() -> Hypersurface {
    Hypersurface::sphere(0.25, [0.5, 0.5, 0.5]).unwrap()
}

fn nonempty(d: usize, m: u64) -> bool {
    shell_count(ShellSpec::new(d, m).unwrap()) > 0
}

/// Smallest m ≥ target with a non-empty shell.
fn next_admissible(d: usize, target: f64) -> u64 {
    let mut m = target.ceil() as u64;
    while !nonempty(d, m) {
        m += 1;
    }
    m
}

/// Admissible m near `count` log-spaced targets in [lo, hi], deduplicated.
fn log_spaced_admissible(d: usize, lo: f64, hi: f64, count: usize) -> Vec<u64> {
    let mut ms: Vec<u64> = (0..count)
        .map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64))
        .map(|t| next_admissible(d, t))
        .collect();
    ms.dedup();
    ms
}

fn shell_count_oracle() -> Verdict {
    let bad: Vec<u64> = (0..=100_000u64)
        .filter(|&m| shell_count(ShellSpec::new(2, m).unwrap()) != two_squares_count_oracle(m))
        .collect();
    verdict(
        bad.is_empty(),
        format!("m ≤ 1e5, d = 2: {} mismatches {:?}", bad.len(), &bad[..bad.len().min(5)]),
    )
}

fn jarnik_floor() -> Verdict {
    let (ratio, arg, worst_count) = (1..=1_000_000u64)
        .into_par_iter()
        .filter_map(|m| {
            let s = enumerate_shell(ShellSpec::new(2, m).unwrap()).unwrap();
            if s.len() < 3 {
                return None;
            }
            let ratio = min_enclosing_arc_of_three(&s).unwrap() / (m as f64).powf(1.0 / 6.0);
            let count = max_cap_count(&s, 2.0 * s.radius().cbrt(), CapMode::Exact2d).unwrap();
            Some((ratio, m, count))
        })
        .reduce(
            || (f64::INFINITY, 0, 0),
            |a, b| {
                let (r, m) = if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { (b.0, b.1) } else { (a.0, a.1) };
                (r, m, a.2.max(b.2))
            },
        );
    verdict(
        ratio >= 2.0 && worst_count <= 2,
        format!(
            "m ≤ 1e6: min arc/m^(1/6) = {ratio:.4} at m = {arg} (need ≥ 2), max count in arc 2λ^(1/3) = {worst_count} (need ≤ 2)"
        ),
    )
}

fn sigma_oracle() -> Verdict {
    let n = 1000;
    let mut worst_closed = 0.0f64;
    let mut worst_asym = 0.0f64;
    let mut asym_checked = 0;
    for s in [circle(), sphere()] {
        let d = s.dim();
        let rows: Vec<(f64, f64, Option<f64>)> = (0..n)
            .into_par_iter()
            .map(|k| {
                let r = 1000.0 * (k as f64 + 1.0) / n as f64;
                let xi: Vec<f64> = quasi_uniform_direction(d, k).iter().map(|c| c * r).collect();
                let q = s.sigma_hat(&xi, 1e-9).unwrap().value;
                let c = s.sigma_hat_closed_form(&xi).unwrap().value;
                let asym = if r >= 400.0 {
                    let z = 2.0 * PI * 0.25 * r;
                    let envelope = if d == 2 { (2.0 / (PI * z)).sqrt() } else { 1.0 / z };
                    (c.norm() >= 0.25 * envelope).then(|| {
                        let a = s.sigma_hat_asymptotic(&xi).unwrap().value;
                        (a - c).norm() / c.norm()
                    })
                } else {
                    None
                };
                (r, (q - c).norm(), asym)
            })
            .collect();
        for (_, diff, asym) in rows {
            worst_closed = worst_closed.max(diff);
            if let Some(a) = asym {
                worst_asym = worst_asym.max(a);
                asym_checked += 1;
            }
        }
    }
    verdict(
        worst_closed <= 1e-6 && worst_asym <= 0.05 && asym_checked > 0,
        format!(
            "1000 frequencies each, |ξ| ≤ 1000: max |quad − closed| = {worst_closed:.2e} (≤ 1e-6); \
             {asym_checked} checks at |ξ| ≥ 400: max asymptotic rel. err = {worst_asym:.2e} (≤ 0.05)"
        ),
    )
}

fn decay_profile() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, s) in [("circle", circle()), ("sphere", sphere())] {
        let blocks = s.decay_profile(16.0, 1024.0, 32, 1e-9).unwrap();
        let half = blocks.len() / 2;
        let low = blocks[..half].iter().map(|b| b.max_scaled).fold(0.0, f64::max);
        let high = blocks[half..].iter().map(|b| b.max_scaled).fold(0.0, f64::max);
        let bounded = blocks.iter().all(|b| b.max_scaled.is_finite());
        ok &= bounded && blocks.len() == 6 && high <= 1.5 * low;
        parts.push(format!("{name}: top/bottom = {:.3}", high / low));
    }
    verdict(ok, format!("6 dyadic blocks in [16, 1024): {} (≤ 1.5)", parts.join(", ")))
}

fn restriction_identity() -> Verdict {
    let cases = [
        (2usize, circle(), 1000u64),
        (3usize, sphere(), 1u64),
    ];
    let mut worst = 0.0f64;
    let mut shells = 0;
    for (d, s, start) in cases {
        let ms: Vec<u64> = (start..).filter(|&m| nonempty(d, m)).take(20).collect();
        for m in ms {
            let pts = enumerate_shell(ShellSpec::new(d, m).unwrap()).unwrap().into_points();
            let g = gram_matrix(&pts, &s, 1e-12).unwrap();
            let direct = torus_restrict::restriction::DirectQuadrature::new(&s);
            let diff = (0..100u64)
                .into_par_iter()
                .map(|seed| {
                    let v = random_coefficients(&pts, seed ^ (m << 20)).unwrap();
                    let q = restriction_norm_sq(&v, &g).unwrap();
                    (q - direct.norm_sq(&v, 1e-10).unwrap()).abs()
                })
                .reduce(|| 0.0, f64::max);
            worst = worst.max(diff);
            shells += 1;
        }
    }
    // The standalone helper is the same computation.
    let pts = enumerate_shell(ShellSpec::new(2, 1105).unwrap()).unwrap().into_points();
    let v = random_coefficients(&pts, 1).unwrap();
    let g = gram_matrix(&pts, &circle(), 1e-12).unwrap();
    let helper = (restriction_norm_sq(&v, &g).unwrap()
        - direct_restriction_norm_sq(&v, &circle(), 1e-10).unwrap())
    .abs();
    worst = worst.max(helper);
    verdict(
        worst <= 1e-5 && shells == 40,
        format!("{shells} shells × 100 unit vectors (d = 2, 3): max |v*Gv − direct| = {worst:.2e} (≤ 1e-5)"),
    )
}

fn sweep_records() -> &'static Vec<RestrictionSweepRecord> {
    static RECORDS: std::sync::OnceLock<Vec<RestrictionSweepRecord>> = std::sync::OnceLock::new();
    RECORDS.get_or_init(|| {
        let ms = log_spaced_admissible(2, 1e4, 1e6, 128);
        restriction_sweep(&circle(), &ms, 1e-10).unwrap()
    })
}

fn restriction_sweep_bounds() -> Verdict {
    let recs = sweep_records();
    let half = recs.len() / 2;
    let (lower, upper) = recs.split_at(half);
    let min = |r: &[RestrictionSweepRecord]| r.iter().map(|x| x.lambda_min).fold(f64::INFINITY, f64::min);
    let max = |r: &[RestrictionSweepRecord]| r.iter().map(|x| x.lambda_max).fold(0.0, f64::max);
    let all_positive = recs.iter().all(|r| r.lambda_min > 0.0);
    let trend_lo = min(upper) >= 0.5 * min(lower);
    let trend_hi = max(upper) <= 2.0 * max(lower);
    verdict(
        recs.len() >= 100 && all_positive && trend_lo && trend_hi,
        format!(
            "{} shells, m ∈ [1e4, 1e6], circle ρ = 1/4: min λ_min = {:.4}; λ_min lower/upper half {:.4}/{:.4}; \
             λ_max lower/upper half {:.4}/{:.4}",
            recs.len(),
            min(recs),
            min(lower),
            min(upper),
            max(lower),
            max(upper)
        ),
    )
}

fn certificate_soundness() -> Verdict {
    let recs = sweep_records();
    let unsound: Vec<u64> = recs.iter().filter(|r| !r.certificate_holds()).map(|r| r.m).collect();
    let fit_recs: Vec<SumRecord> = recs
        .iter()
        .filter(|r| r.offdiag_total > 0.0)
        .map(|r| SumRecord {
            parameter: (r.m as f64).sqrt(),
            magnitude: r.offdiag_total,
            trivial_bound: r.gram_points as f64,
            normalized: r.offdiag_total,
        })
        .collect();
    let (slope, _, resid) = exponent_fit(&fit_recs).unwrap();
    verdict(
        unsound.is_empty() && slope <= -1.0 / 6.0 + 0.05,
        format!(
            "{} shells, {} unsound {:?}; T vs λ slope = {slope:.4} (≤ {:.4}), rms {resid:.3}, {} shells with T = 0",
            recs.len(),
            unsound.len(),
            &unsound[..unsound.len().min(5)],
            -1.0 / 6.0 + 0.05,
            recs.len() - fit_recs.len()
        ),
    )
}

fn coplanar_small_caps() -> Verdict {
    let bad: Vec<u64> = (1..=10_000u64)
        .into_par_iter()
        .filter(|&m| {
            let s = enumerate_shell(ShellSpec::new(3, m).unwrap()).unwrap();
            !s.is_empty()
                && small_cap_coplanarity_counterexample(&s, 0.5 * (m as f64).powf(0.125))
                    .unwrap()
                    .is_some()
        })
        .collect();
    verdict(
        bad.is_empty(),
        format!("d = 3, m ≤ 1e4, radius 0.5·m^(1/8): {} counterexamples {:?}", bad.len(), &bad[..bad.len().min(5)]),
    )
}

fn mean_square() -> Verdict {
    let ms = log_spaced_admissible(3, 1e3, 1e5, 60);
    let rows: Vec<(SumRecord, bool)> = ms
        .par_iter()
        .map(|&m| {
            let s = enumerate_shell(ShellSpec::new(3, m).unwrap()).unwrap();
            let hist = cell_histogram(&s, (m as f64).powf(0.25)).unwrap();
            let stat = mean_square_statistic(&hist) as f64;
            (
                SumRecord {
                    parameter: s.radius(),
                    magnitude: stat,
                    trivial_bound: (s.len() * s.len()) as f64,
                    normalized: stat / s.radius(),
                },
                hist.total() == s.len() as u64,
            )
        })
        .collect();
    let identity = rows.iter().all(|r| r.1);
    let recs: Vec<SumRecord> = rows.into_iter().map(|r| r.0).collect();
    let (slope, _, resid) = exponent_fit(&recs).unwrap();
    verdict(
        identity && slope <= 1.3,
        format!(
            "{} shells, m ∈ [1e3, 1e5], side m^(1/4): Σ N² vs λ slope = {slope:.4} (≤ 1.3), rms {resid:.3}; Σ N = #E on all: {identity}",
            recs.len()
        ),
    )
}

fn bilinear_bound() -> Verdict {
    let mut jobs = Vec::new();
    for beta in [1e3, 1e4, 1e5, 1e6] {
        jobs.push((beta, SetPattern::MaximalGrid, 0u64));
        for seed in 0..10u64 {
            jobs.push((beta, SetPattern::RandomGreedy, seed));
            jobs.push((beta, SetPattern::PerturbedGrid, seed));
        }
    }
    let results: Vec<(f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(beta, p, seed)| {
            let xs = separated_set(beta, p, 2 * seed).unwrap();
            let ys = if p == SetPattern::MaximalGrid {
                xs.clone()
            } else {
                separated_set(beta, p, 2 * seed + 1).unwrap()
            };
            let mag = bilinear_sum(beta, &xs, &ys).unwrap().norm();
            (beta, mag, (xs.len() * ys.len()) as f64)
        })
        .collect();
    let worst_ratio = results
        .iter()
        .map(|(b, mag, _)| mag / b.powf(23.0 / 24.0 + 0.05))
        .fold(0.0, f64::max);
    let trivial_ok = results.iter().all(|(_, mag, triv)| *mag <= triv * (1.0 + 1e-12));
    verdict(
        worst_ratio <= 1.0 && trivial_ok,
        format!(
            "{} sums, β ∈ {{1e3..1e6}}: max |S|/β^(23/24+0.05) = {worst_ratio:.4} (≤ 1); |S| ≤ |X||Y| on all: {trivial_ok}",
            results.len()
        ),
    )
}

fn cap_pair_exponent() -> Verdict {
    let ms = log_spaced_admissible(3, 1e3, 2e5, 24);
    let direction = [0.267_261_241_912_424_4, 0.534_522_483_824_848_8, 0.801_783_725_737_273_2];
    let recs = cap_pair_sweep(&sphere(), &ms, 0.25, &direction, 8.0, 7).unwrap();
    let (slope, _, resid) = exponent_fit(&recs).unwrap();
    let trivial_ok = recs.iter().all(|r| r.magnitude <= r.trivial_bound * (1.0 + 1e-12));
    verdict(
        slope <= 1.0 && trivial_ok,
        format!(
            "{} shells, d = 3, r = λ/4, antipodal caps: measured exponent {slope:.4} (≤ 1.0), rms {resid:.3}",
            recs.len()
        ),
    )
}

fn run_cli(args: &[&str], out: &Path, jobs: usize) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_torlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--jobs")
        .arg(jobs.to_string())
        .status()
        .expect("torlab runs");
    assert!(status.success(), "torlab {args:?} failed");
    std::fs::read(out).unwrap()
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["shells", "--m-min", "1", "--m-max", "300"],
        &["caps", "--m-min", "1", "--m-max", "300"],
        &["caps", "--d", "3", "--m-min", "1", "--m-max", "200"],
        &["jarnik", "--m-min", "1", "--m-max", "2000"],
        &["meansquare", "--m-min", "1000", "--m-max", "1050"],
        &["sigma", "--m-list", "0,10,1000,250000", "--surface", "ellipse:a=0.3,b=0.2"],
        &["sigma", "--m-list", "5,160000", "--surface", "sphere:rho=0.25", "--format", "json"],
        &["restrict", "--m-list", "25,65,85", "--vectors", "8", "--seed", "3"],
        &["restrict", "--d", "3", "--m-list", "6,9", "--vectors", "4", "--surface", "ellipsoid:a=0.3,b=0.25,c=0.2"],
        &["certify", "--m-min", "10000", "--m-max", "10100"],
        &["bilinear", "--beta-list", "1000,20000", "--sets", "3", "--seed", "11"],
        &["cappair", "--m-list", "1001,5001,20001", "--seed", "5"],
    ];
    let mut differing = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let outs: Vec<Vec<u8>> = [1usize, 3, 1, 4]
            .iter()
            .enumerate()
            .map(|(k, &jobs)| run_cli(args, &dir.path().join(format!("run{i}_{k}")), jobs))
            .collect();
        if outs.iter().any(|o| *o != outs[0]) || outs[0].is_empty() {
            differing.push(args[0]);
        }
    }
    verdict(
        differing.is_empty(),
        format!(
            "{} CLI configurations × jobs ∈ {{1, 3, 1, 4}}: byte-identical except {:?}",
            runs.len(),
            differing
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 12] = [
        ("shell-count-oracle", shell_count_oracle),
        ("jarnik-floor", jarnik_floor),
        ("sigma-oracle", sigma_oracle),
        ("decay-profile", decay_profile),
        ("restriction-identity", restriction_identity),
        ("restriction-sweep", restriction_sweep_bounds),
        ("certificate-soundness", certificate_soundness),
        ("coplanar-small-caps", coplanar_small_caps),
        ("mean-square", mean_square),
        ("bilinear-bound", bilinear_bound),
        ("cap-pair-exponent", cap_pair_exponent),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
