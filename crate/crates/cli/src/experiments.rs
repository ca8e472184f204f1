//! Sweep drivers, one per experiment.
//!
//! Every row starts with `experiment, schema_version, d, m|beta, seed,
//! status`. A parameter that fails records `error: ...` in `status` and `NA`
//! in its remaining cells; the sweep carries on.

use rayon::prelude::*;

use torus_restrict::cap_stats::{
    cell_histogram, max_cap_count, mean_square_statistic, min_enclosing_arc_of_three,
    small_cap_coplanarity_counterexample, CapMode,
};
use torus_restrict::expsums::{bilinear_record, cap_pair_sweep, separated_set, SetPattern};
use torus_restrict::lattice_shell::{
    enumerate_shell, shell_count, two_squares_count_oracle, Shell, ShellSpec,
};
use torus_restrict::restriction::{
    cluster_certificate, default_threshold, extreme_eigenvalues, gram_matrix, random_coefficients,
    restriction_norm_sq, DirectQuadrature,
};
use torus_restrict::surface::{quasi_uniform_direction, Hypersurface};
use torus_restrict::{Error, Result};

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{Cell, Table, SCHEMA_VERSION};

/// Reference exponent for normalizing bilinear sums.
pub const BILINEAR_REFERENCE_POWER: f64 = 23.0 / 24.0;

/// Slack on the reference exponent in the `within_bound` column.
pub const BILINEAR_EXPONENT_SLACK: f64 = 0.05;

/// Fixed direction picking the first cap centre in `cappair`.
const CAP_DIRECTION: [f64; 3] = [0.267_261_241_912_424_4, 0.534_522_483_824_848_8, 0.801_783_725_737_273_2];

/// Derives an independent stream seed.
pub fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over a simple combination
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type Outcome = Result<(&'static str, Vec<Cell>)>;

fn columns(experiment: Experiment) -> Vec<&'static str> {
    let key = if experiment == Experiment::Bilinear { "beta" } else { "m" };
    let mut cols = vec!["experiment", "schema_version", "d", key, "seed", "status"];
    cols.extend_from_slice(match experiment {
        Experiment::Shells => &["count", "oracle"],
        Experiment::Caps => &["count", "lambda", "r", "mode", "max_cap_count", "coplanar"],
        Experiment::Jarnik => &["count", "min_arc", "floor_ratio", "arc_length", "max_arc_count"],
        Experiment::MeanSquare => &[
            "count", "lambda", "cell_side", "cells", "sum_n", "sum_n_sq", "partition_ok",
        ],
        Experiment::Sigma => &[
            "xi_norm", "re", "im", "abs", "err_estimate", "scaled", "closed_re", "closed_im",
            "closed_diff", "asym_re", "asym_im", "asym_rel_diff",
        ],
        Experiment::Restrict => &[
            "count", "vectors", "max_abs_diff", "min_quadratic", "max_quadratic", "lambda_min",
            "lambda_max",
        ],
        Experiment::Certify => &[
            "count", "gram_points", "threshold", "groups", "lambda_min", "lambda_max",
            "offdiag_total", "c_est", "c_upper_est", "certificate_holds",
        ],
        Experiment::Bilinear => &[
            "pattern", "rep", "x_size", "y_size", "magnitude", "trivial_bound", "normalized",
            "within_bound",
        ],
        Experiment::CapPair => &[
            "count", "lambda", "cap_size", "magnitude", "trivial_bound", "normalized",
        ],
    });
    cols
}

/// Runs the experiment on a pool of `config.jobs` threads (rayon's default
/// when unset). Rows come out in parameter order.
pub fn run(config: &ExperimentConfig) -> std::io::Result<Table> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = config.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder.build().map_err(std::io::Error::other)?;
    Ok(pool.install(|| run_in_pool(config)))
}

fn run_in_pool(config: &ExperimentConfig) -> Table {
    let cols = columns(config.experiment);
    let width = cols.len() - 6;
    let d_cell = config.d.map_or(Cell::Na, Cell::from);
    let prefix = |key: Cell, status: String| {
        vec![
            Cell::from(config.experiment.name()),
            Cell::Int(SCHEMA_VERSION as i64),
            d_cell.clone(),
            key,
            Cell::from(config.seed),
            Cell::Text(status),
        ]
    };
    let finish = |key: Cell, outcome: Outcome| {
        let (status, cells) = match outcome {
            Ok((status, cells)) => (status.to_string(), cells),
            Err(e) => (format!("error: {e}"), vec![Cell::Na; width]),
        };
        debug_assert_eq!(cells.len(), width);
        let mut row = prefix(key, status);
        row.extend(cells);
        row
    };

    let rows = if config.experiment == Experiment::Bilinear {
        let jobs = bilinear_jobs(config);
        jobs.par_iter()
            .map(|job| finish(Cell::Float(job.beta), bilinear_row(config, job)))
            .collect()
    } else {
        let d = config.d.expect("dimension set for shell experiments");
        config
            .m_values
            .par_iter()
            .map(|&m| {
                let outcome = match config.experiment {
                    Experiment::Shells => shells_row(d, m),
                    Experiment::Caps => caps_row(config, d, m),
                    Experiment::Jarnik => jarnik_row(config, m),
                    Experiment::MeanSquare => meansquare_row(d, m),
                    Experiment::Sigma => sigma_row(config, m),
                    Experiment::Restrict => restrict_row(config, d, m),
                    Experiment::Certify => certify_row(config, m),
                    Experiment::CapPair => cappair_row(config, m),
                    Experiment::Bilinear => unreachable!(),
                };
                finish(Cell::from(m), outcome)
            })
            .collect()
    };
    Table { columns: cols, rows }
}

fn surface(config: &ExperimentConfig) -> &Hypersurface {
    config.surface.as_ref().expect("validated config has a surface")
}

fn shell(d: usize, m: u64) -> Result<Shell> {
    enumerate_shell(ShellSpec::new(d, m)?)
}

fn empty(width: usize, count_first: bool) -> Outcome {
    let mut cells = vec![Cell::Na; width];
    if count_first {
        cells[0] = Cell::Int(0);
    }
    Ok(("empty_shell", cells))
}

fn shells_row(d: usize, m: u64) -> Outcome {
    let count = shell_count(ShellSpec::new(d, m)?);
    let oracle = if d == 2 {
        Cell::from(two_squares_count_oracle(m))
    } else {
        Cell::Na
    };
    Ok(("ok", vec![Cell::from(count), oracle]))
}

fn caps_row(config: &ExperimentConfig, d: usize, m: u64) -> Outcome {
    let s = shell(d, m)?;
    if s.is_empty() {
        return empty(6, true);
    }
    let lambda = s.radius();
    let (mode, r) = if d == 2 {
        (CapMode::Exact2d, config.threshold.unwrap_or(2.0 * lambda.cbrt()))
    } else {
        (
            CapMode::Centered,
            config.threshold.unwrap_or(0.5 * (m as f64).powf(0.125)),
        )
    };
    let count = max_cap_count(&s, r, mode)?;
    let coplanar = if d == 3 {
        Cell::from(small_cap_coplanarity_counterexample(&s, r)?.is_none())
    } else {
        Cell::Na
    };
    let mode_name = match mode {
        CapMode::Exact2d => "exact2d",
        CapMode::Centered => "centered",
    };
    Ok((
        "ok",
        vec![
            Cell::from(s.len()),
            Cell::from(lambda),
            Cell::from(r),
            Cell::from(mode_name),
            Cell::from(count),
            coplanar,
        ],
    ))
}

fn jarnik_row(config: &ExperimentConfig, m: u64) -> Outcome {
    let s = shell(2, m)?;
    if s.is_empty() {
        return empty(5, true);
    }
    let arc = config.threshold.unwrap_or(2.0) * s.radius().cbrt();
    let count = max_cap_count(&s, arc, CapMode::Exact2d)?;
    let (status, min_arc, ratio) = if s.len() >= 3 {
        let a = min_enclosing_arc_of_three(&s)?;
        ("ok", Cell::from(a), Cell::from(a / (m as f64).powf(1.0 / 6.0)))
    } else {
        ("fewer_than_three", Cell::Na, Cell::Na)
    };
    Ok((
        status,
        vec![Cell::from(s.len()), min_arc, ratio, Cell::from(arc), Cell::from(count)],
    ))
}

fn meansquare_row(d: usize, m: u64) -> Outcome {
    let s = shell(d, m)?;
    if s.is_empty() {
        return empty(7, true);
    }
    let side = (m as f64).powf(0.25);
    let hist = cell_histogram(&s, side)?;
    let total = hist.total();
    Ok((
        "ok",
        vec![
            Cell::from(s.len()),
            Cell::from(s.radius()),
            Cell::from(side),
            Cell::from(hist.counts.len()),
            Cell::from(total),
            Cell::from(mean_square_statistic(&hist)),
            Cell::from(total == s.len() as u64),
        ],
    ))
}

/// `ξ = √m · u_m` with `u_m` the m-th quasi-uniform direction.
pub fn sigma_frequency(dim: usize, m: u64) -> Vec<f64> {
    let r = (m as f64).sqrt();
    quasi_uniform_direction(dim, m as usize)
        .into_iter()
        .map(|c| r * c)
        .collect()
}

fn sigma_row(config: &ExperimentConfig, m: u64) -> Outcome {
    let s = surface(config);
    let xi = sigma_frequency(s.dim(), m);
    let r = (m as f64).sqrt();
    let q = s.sigma_hat(&xi, config.tol)?;
    let closed = if m > 0 {
        match s.sigma_hat_closed_form(&xi) {
            Ok(c) => Some(c.value),
            Err(Error::UnsupportedKind(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let asym = if m > 0 {
        match s.sigma_hat_asymptotic(&xi) {
            Ok(a) => Some(a.value),
            Err(Error::BelowThreshold { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let qv = q.value;
    Ok((
        "ok",
        vec![
            Cell::from(r),
            Cell::from(qv.re),
            Cell::from(qv.im),
            Cell::from(qv.norm()),
            Cell::from(q.err_estimate),
            Cell::from(qv.norm() * r.powf((s.dim() - 1) as f64 / 2.0)),
            Cell::opt_float(closed.map(|c| c.re)),
            Cell::opt_float(closed.map(|c| c.im)),
            Cell::opt_float(closed.map(|c| (c - qv).norm())),
            Cell::opt_float(asym.map(|a| a.re)),
            Cell::opt_float(asym.map(|a| a.im)),
            Cell::opt_float(asym.map(|a| (a - qv).norm() / qv.norm())),
        ],
    ))
}

fn restrict_row(config: &ExperimentConfig, d: usize, m: u64) -> Outcome {
    let s = shell(d, m)?;
    if s.is_empty() {
        return empty(7, true);
    }
    let surf = surface(config);
    let gram = gram_matrix(s.points(), surf, config.tol)?;
    let (lo, hi) = extreme_eigenvalues(&gram)?;
    let direct = DirectQuadrature::new(surf);
    let results: Vec<(f64, f64)> = (0..config.vectors as u64)
        .into_par_iter()
        .map(|k| {
            let v = random_coefficients(s.points(), mix_seed(config.seed, m, k))?;
            let q = restriction_norm_sq(&v, &gram)?;
            let oracle = direct.norm_sq(&v, config.tol)?;
            Ok((q, (q - oracle).abs()))
        })
        .collect::<Result<_>>()?;
    let max_diff = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let qmin = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let qmax = results.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    Ok((
        "ok",
        vec![
            Cell::from(s.len()),
            Cell::from(config.vectors),
            Cell::from(max_diff),
            Cell::from(qmin),
            Cell::from(qmax),
            Cell::from(lo),
            Cell::from(hi),
        ],
    ))
}

fn certify_row(config: &ExperimentConfig, m: u64) -> Outcome {
    let s = shell(2, m)?;
    if s.is_empty() {
        return empty(10, true);
    }
    let threshold = config.threshold.unwrap_or_else(|| default_threshold(m));
    let rec = cluster_certificate(&s, surface(config), threshold, config.tol)?;
    Ok((
        "ok",
        vec![
            Cell::from(rec.shell_size),
            Cell::from(rec.gram_points),
            Cell::from(threshold),
            Cell::from(rec.groups),
            Cell::from(rec.lambda_min),
            Cell::from(rec.lambda_max),
            Cell::from(rec.offdiag_total),
            Cell::from(rec.c_est),
            Cell::from(rec.c_upper_est),
            Cell::from(rec.certificate_holds()),
        ],
    ))
}

fn cappair_row(config: &ExperimentConfig, m: u64) -> Outcome {
    let surf = surface(config);
    let count = shell_count(ShellSpec::new(3, m)?);
    if count == 0 {
        return empty(6, true);
    }
    let recs = cap_pair_sweep(
        surf,
        &[m],
        config.cap_fraction,
        &CAP_DIRECTION,
        config.separation,
        config.seed,
    )?;
    let r = recs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no record for a non-empty shell".into()))?;
    Ok((
        "ok",
        vec![
            Cell::from(count),
            Cell::from(r.parameter),
            Cell::from(config.cap_fraction * r.parameter),
            Cell::from(r.magnitude),
            Cell::from(r.trivial_bound),
            Cell::from(r.normalized),
        ],
    ))
}

struct BilinearJob {
    beta: f64,
    pattern: SetPattern,
    rep: usize,
}

fn bilinear_jobs(config: &ExperimentConfig) -> Vec<BilinearJob> {
    let mut jobs = Vec::new();
    for &beta in &config.betas {
        for &pattern in &config.patterns {
            let reps = if pattern == SetPattern::MaximalGrid { 1 } else { config.sets };
            jobs.extend((0..reps).map(|rep| BilinearJob { beta, pattern, rep }));
        }
    }
    jobs
}

fn bilinear_row(config: &ExperimentConfig, job: &BilinearJob) -> Outcome {
    let rep = job.rep as u64;
    let xs = separated_set(job.beta, job.pattern, mix_seed(config.seed, rep, 0))?;
    let ys = separated_set(job.beta, job.pattern, mix_seed(config.seed, rep, 1))?;
    let rec = bilinear_record(job.beta, &xs, &ys, config.phase, BILINEAR_REFERENCE_POWER)?;
    let bound = job.beta.powf(BILINEAR_REFERENCE_POWER + BILINEAR_EXPONENT_SLACK);
    Ok((
        "ok",
        vec![
            Cell::from(job.pattern.name()),
            Cell::from(job.rep),
            Cell::from(xs.len()),
            Cell::from(ys.len()),
            Cell::from(rec.magnitude),
            Cell::from(rec.trivial_bound),
            Cell::from(rec.normalized),
            Cell::from(rec.magnitude <= bound),
        ],
    ))
}
