//! Experiment configuration: a flat `key = value` file with one `[section]`
//! per experiment, overridden by command-line flags.
//!
//! ```text
//! # comment
//! [restrict]
//! m-list = 25, 50, 65
//! surface = circle:rho=0.25
//! vectors = 20
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use torus_restrict::expsums::{BilinearPhase, SetPattern};
use torus_restrict::surface::Hypersurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    Shells,
    Caps,
    Jarnik,
    MeanSquare,
    Sigma,
    Restrict,
    Certify,
    Bilinear,
    CapPair,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Self::Shells,
        Self::Caps,
        Self::Jarnik,
        Self::MeanSquare,
        Self::Sigma,
        Self::Restrict,
        Self::Certify,
        Self::Bilinear,
        Self::CapPair,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Shells => "shells",
            Self::Caps => "caps",
            Self::Jarnik => "jarnik",
            Self::MeanSquare => "meansquare",
            Self::Sigma => "sigma",
            Self::Restrict => "restrict",
            Self::Certify => "certify",
            Self::Bilinear => "bilinear",
            Self::CapPair => "cappair",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    fn allowed_names() -> String {
        Self::ALL.map(|e| e.name()).join(", ")
    }

    /// Keys accepted for this experiment besides the common ones.
    fn extra_keys(&self) -> &'static [&'static str] {
        match self {
            Self::Shells | Self::MeanSquare => &[],
            Self::Caps | Self::Jarnik => &["threshold"],
            Self::Sigma => &["surface", "tol"],
            Self::Restrict => &["surface", "tol", "vectors"],
            Self::Certify => &["surface", "tol", "threshold"],
            Self::Bilinear => &["beta-list", "patterns", "sets", "phase"],
            Self::CapPair => &["surface", "cap-fraction", "separation"],
        }
    }

    fn uses_m(&self) -> bool {
        *self != Self::Bilinear
    }

    fn uses_surface(&self) -> bool {
        self.extra_keys().contains(&"surface")
    }

    pub fn accepts(&self, key: &str) -> bool {
        let common: &[&str] = if self.uses_m() {
            &["d", "m-min", "m-max", "m-list", "seed", "out", "format", "jobs"]
        } else {
            &["seed", "out", "format", "jobs"]
        };
        common.contains(&key) || self.extra_keys().contains(&key)
    }

    fn keys(&self) -> String {
        let mut keys: Vec<&str> = [
            "d", "m-min", "m-max", "m-list", "seed", "out", "format", "jobs",
        ]
        .into_iter()
        .chain(self.extra_keys().iter().copied())
        .filter(|k| self.accepts(k))
        .collect();
        keys.sort_unstable();
        keys.join(", ")
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// One configuration problem, tied to a section and (usually) a key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub section: String,
    pub key: Option<String>,
    pub message: String,
}

impl Diagnostic {
    fn new(section: &str, key: Option<&str>, message: impl Into<String>) -> Self {
        Self {
            section: section.to_string(),
            key: key.map(str::to_string),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "[{}] {}: {}", self.section, k, self.message),
            None => write!(f, "[{}] {}", self.section, self.message),
        }
    }
}

/// Raw settings for one experiment, keyed by flag name.
pub type Settings = BTreeMap<String, String>;

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Ambient dimension; `None` for the bilinear sums.
    pub d: Option<usize>,
    pub m_values: Vec<u64>,
    pub betas: Vec<f64>,
    pub surface: Option<Hypersurface>,
    pub surface_text: Option<String>,
    pub threshold: Option<f64>,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub jobs: Option<usize>,
    pub vectors: usize,
    pub patterns: Vec<SetPattern>,
    pub sets: usize,
    pub phase: BilinearPhase,
    pub cap_fraction: f64,
    pub separation: f64,
}

/// Sweeps longer than this are refused.
pub const MAX_SWEEP_LEN: u64 = 10_000_000;

impl ExperimentConfig {
    /// Checks every setting, collecting all problems before failing.
    pub fn from_settings(
        experiment: Experiment,
        settings: &Settings,
    ) -> Result<Self, Vec<Diagnostic>> {
        let sec = experiment.name();
        let mut diags = Vec::new();
        for key in settings.keys() {
            if !experiment.accepts(key) {
                diags.push(Diagnostic::new(
                    sec,
                    Some(key),
                    format!("unknown key; accepted keys: {}", experiment.keys()),
                ));
            }
        }
        let mut p = Parser {
            sec,
            settings,
            diags: &mut diags,
        };

        let seed = p.parse::<u64>("seed").unwrap_or(0);
        let jobs = p.parse::<usize>("jobs");
        if jobs == Some(0) {
            p.fail("jobs", "must be at least 1");
        }
        let out = settings.get("out").map(PathBuf::from);
        let format = match settings.get("format").map(String::as_str) {
            None | Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => {
                p.fail("format", format!("expected csv or json, got '{other}'"));
                Format::Csv
            }
        };
        let tol = p.parse::<f64>("tol").unwrap_or(1e-10);
        if !(tol > 0.0) {
            p.fail("tol", format!("must be positive, got {tol}"));
        }
        let threshold = p.parse::<f64>("threshold");
        if let Some(t) = threshold {
            if !(t > 0.0) {
                p.fail("threshold", format!("must be positive, got {t}"));
            }
        }

        let (surface, surface_text) = if experiment.uses_surface() {
            let text = settings.get("surface").cloned().unwrap_or_else(|| {
                let d = settings.get("d").map(String::as_str);
                if experiment == Experiment::CapPair || d == Some("3") {
                    "sphere:rho=0.25".into()
                } else {
                    "circle:rho=0.25".into()
                }
            });
            match parse_surface(&text) {
                Ok(s) => (Some(s), Some(text)),
                Err(msg) => {
                    p.fail("surface", msg);
                    (None, Some(text))
                }
            }
        } else {
            (None, None)
        };

        let d = if experiment.uses_m() {
            let default = match (experiment, &surface) {
                (_, Some(s)) => s.dim(),
                (Experiment::MeanSquare, _) => 3,
                _ => 2,
            };
            let d = p.parse::<usize>("d").unwrap_or(default);
            let fixed = match experiment {
                Experiment::Jarnik | Experiment::Certify => Some(2),
                Experiment::CapPair => Some(3),
                _ => None,
            };
            if let Some(f) = fixed {
                if d != f {
                    p.fail("d", format!("{experiment} runs in dimension {f} only"));
                }
            } else if !(2..=5).contains(&d) {
                p.fail("d", format!("dimension must be in 2..=5, got {d}"));
            }
            if let Some(s) = &surface {
                if s.dim() != d {
                    p.fail(
                        "surface",
                        format!("{}-dimensional surface with d = {d}", s.dim()),
                    );
                }
            }
            Some(d)
        } else {
            None
        };

        let m_values = if experiment.uses_m() {
            p.m_values()
        } else {
            Vec::new()
        };

        let betas = if experiment == Experiment::Bilinear {
            match settings.get("beta-list") {
                None => {
                    p.fail("beta-list", "required");
                    Vec::new()
                }
                Some(text) => {
                    let vals = p.list::<f64>("beta-list", text);
                    if vals.is_empty() {
                        p.fail("beta-list", "empty β list");
                    }
                    if let Some(b) = vals.iter().find(|b| !(**b >= 1.0 && b.is_finite())) {
                        p.fail("beta-list", format!("β must be ≥ 1, got {b}"));
                    }
                    vals
                }
            }
        } else {
            Vec::new()
        };

        let vectors = p.parse::<usize>("vectors").unwrap_or(10);
        if vectors == 0 {
            p.fail("vectors", "must be at least 1");
        }
        let sets = p.parse::<usize>("sets").unwrap_or(10);
        let patterns = match settings.get("patterns") {
            None => SetPattern::ALL.to_vec(),
            Some(text) => {
                let v = p.list::<SetPattern>("patterns", text);
                if v.is_empty() {
                    p.fail("patterns", "empty pattern list");
                }
                v
            }
        };
        let phase = match settings.get("phase").map(String::as_str) {
            None | Some("full") => BilinearPhase::Full,
            Some("linear") => BilinearPhase::Linear,
            Some(other) => {
                p.fail("phase", format!("expected full or linear, got '{other}'"));
                BilinearPhase::Full
            }
        };
        let cap_fraction = p.parse::<f64>("cap-fraction").unwrap_or(0.25);
        if !(cap_fraction > 0.0) {
            p.fail("cap-fraction", format!("must be positive, got {cap_fraction}"));
        }
        let separation = p.parse::<f64>("separation").unwrap_or(8.0);
        if !(separation >= 0.0) {
            p.fail("separation", format!("must be non-negative, got {separation}"));
        }

        if !diags.is_empty() {
            return Err(diags);
        }
        Ok(Self {
            experiment,
            d,
            m_values,
            betas,
            surface,
            surface_text,
            threshold,
            tol,
            seed,
            out,
            format,
            jobs,
            vectors,
            patterns,
            sets,
            phase,
            cap_fraction,
            separation,
        })
    }
}

struct Parser<'a> {
    sec: &'a str,
    settings: &'a Settings,
    diags: &'a mut Vec<Diagnostic>,
}

impl Parser<'_> {
    fn fail(&mut self, key: &str, msg: impl Into<String>) {
        self.diags.push(Diagnostic::new(self.sec, Some(key), msg));
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        let text = self.settings.get(key)?;
        match text.trim().parse::<T>() {
            Ok(v) => Some(v),
            Err(_) => {
                self.fail(key, format!("cannot parse '{text}'"));
                None
            }
        }
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, text: &str) -> Vec<T> {
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse::<T>() {
                Ok(v) => out.push(v),
                Err(_) => self.fail(key, format!("cannot parse list item '{item}'")),
            }
        }
        out
    }

    fn m_values(&mut self) -> Vec<u64> {
        let list = self.settings.get("m-list").cloned();
        let (lo, hi) = (self.parse::<u64>("m-min"), self.parse::<u64>("m-max"));
        let range_given = self.settings.contains_key("m-min") || self.settings.contains_key("m-max");
        match (list, range_given) {
            (Some(_), true) => {
                self.fail("m-list", "give either m-list or m-min/m-max, not both");
                Vec::new()
            }
            (Some(text), false) => {
                let v = self.list::<u64>("m-list", &text);
                if v.is_empty() {
                    self.fail("m-list", "empty m range");
                }
                v
            }
            (None, false) => {
                self.fail("m-list", "empty m range: give m-list or m-min and m-max");
                Vec::new()
            }
            (None, true) => match (lo, hi) {
                (Some(lo), Some(hi)) if lo > hi => {
                    self.fail("m-min", format!("empty m range {lo}..={hi}"));
                    Vec::new()
                }
                (Some(lo), Some(hi)) if hi - lo >= MAX_SWEEP_LEN => {
                    self.fail("m-max", format!("sweep longer than {MAX_SWEEP_LEN} values"));
                    Vec::new()
                }
                (Some(lo), Some(hi)) => (lo..=hi).collect(),
                _ => {
                    for (key, other) in [("m-min", "m-max"), ("m-max", "m-min")] {
                        if !self.settings.contains_key(key) {
                            self.fail(key, format!("required with {other}"));
                        }
                    }
                    Vec::new()
                }
            },
        }
    }
}

/// `kind:key=value,...`, e.g. `circle:rho=0.25,cx=0.5,cy=0.5` or
/// `ellipsoid:a=0.3,b=0.25,c=0.2`. Centres default to the middle of the
/// unit cube.
pub fn parse_surface(text: &str) -> Result<Hypersurface, String> {
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let mut params = BTreeMap::new();
    for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("expected key=value in '{item}'"))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse '{v}' for {k}"))?;
        params.insert(k.trim().to_string(), v);
    }
    let allowed: &[&str] = match kind {
        "circle" => &["rho", "cx", "cy"],
        "ellipse" => &["a", "b", "cx", "cy"],
        "sphere" => &["rho", "cx", "cy", "cz"],
        "ellipsoid" => &["a", "b", "c", "cx", "cy", "cz"],
        _ => {
            return Err(format!(
                "unknown surface '{kind}'; expected circle, ellipse, sphere or ellipsoid"
            ))
        }
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(format!(
            "unknown {kind} parameter '{k}'; expected {}",
            allowed.join(", ")
        ));
    }
    let get = |k: &str| -> Result<f64, String> {
        params
            .get(k)
            .copied()
            .ok_or_else(|| format!("{kind} needs {k}"))
    };
    let c = |k: &str| params.get(k).copied().unwrap_or(0.5);
    let surface = match kind {
        "circle" => Hypersurface::circle(get("rho")?, [c("cx"), c("cy")]),
        "ellipse" => Hypersurface::ellipse(get("a")?, get("b")?, [c("cx"), c("cy")]),
        "sphere" => Hypersurface::sphere(get("rho")?, [c("cx"), c("cy"), c("cz")]),
        _ => Hypersurface::ellipsoid(get("a")?, get("b")?, get("c")?, [c("cx"), c("cy"), c("cz")]),
    };
    surface.map_err(|e| e.to_string())
}

/// Sections of a config file, each a list of `(key, value)` in file order.
/// Syntax problems are reported as diagnostics against the line.
pub fn parse_config_text(text: &str) -> (BTreeMap<String, Settings>, Vec<Diagnostic>) {
    let mut sections: BTreeMap<String, Settings> = BTreeMap::new();
    let mut diags = Vec::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let here = format!("line {}", lineno + 1);
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                diags.push(Diagnostic::new(&name, None, format!("{here}: duplicate section")));
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            diags.push(Diagnostic::new(
                current.as_deref().unwrap_or("-"),
                None,
                format!("{here}: expected 'key = value'"),
            ));
            continue;
        };
        let key = key.trim().replace('_', "-");
        let Some(sec) = &current else {
            diags.push(Diagnostic::new(
                "-",
                Some(&key),
                format!("{here}: key outside any [experiment] section"),
            ));
            continue;
        };
        let settings = sections.get_mut(sec).expect("section exists");
        if settings
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            diags.push(Diagnostic::new(sec, Some(&key), format!("{here}: duplicate key")));
        }
    }
    (sections, diags)
}

/// Full schema check of a config text without running anything.
pub fn validate_text(text: &str) -> Vec<Diagnostic> {
    let (sections, mut diags) = parse_config_text(text);
    for (name, settings) in &sections {
        match Experiment::from_name(name) {
            None => diags.push(Diagnostic::new(
                name,
                None,
                format!(
                    "unknown experiment '{name}'; expected one of {}",
                    Experiment::allowed_names()
                ),
            )),
            Some(exp) => {
                if let Err(errs) = ExperimentConfig::from_settings(exp, settings) {
                    diags.extend(errs);
                }
            }
        }
    }
    diags
}

pub fn validate_file(path: &Path) -> std::io::Result<Vec<Diagnostic>> {
    Ok(validate_text(&std::fs::read_to_string(path)?))
}

/// Settings for one experiment from a config file, with syntax problems and
/// unknown sections reported.
pub fn load_section(path: &Path, experiment: Experiment) -> Result<Settings, Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        vec![Diagnostic::new(
            experiment.name(),
            None,
            format!("cannot read {}: {e}", path.display()),
        )]
    })?;
    let (mut sections, mut diags) = parse_config_text(&text);
    for name in sections.keys() {
        if Experiment::from_name(name).is_none() {
            diags.push(Diagnostic::new(
                name,
                None,
                format!(
                    "unknown experiment '{name}'; expected one of {}",
                    Experiment::allowed_names()
                ),
            ));
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(sections.remove(experiment.name()).unwrap_or_default())
}
