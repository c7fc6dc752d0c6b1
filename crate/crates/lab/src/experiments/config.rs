//! Flat `key = value` experiment configuration.
//!
//! The format is deliberately minimal: one key per line, `#` comments,
//! unknown keys rejected, every numeric range validated at parse time.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::restricted_inv::BtConstants;
use crate::sampling::{DistKind, EntryDistribution};
use crate::textio::parse_g17;

/// The experiment kinds, mapping one-to-one onto the acceptance checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    SminSurvey,
    EsdSurvey,
    ChainCensus,
    ShellGrowth,
    BtSuccess,
    StieltjesCompare,
    TypeMass,
    EventProbe,
}

pub const ALL_KINDS: [ExperimentKind; 8] = [
    ExperimentKind::SminSurvey,
    ExperimentKind::EsdSurvey,
    ExperimentKind::ChainCensus,
    ExperimentKind::ShellGrowth,
    ExperimentKind::BtSuccess,
    ExperimentKind::StieltjesCompare,
    ExperimentKind::TypeMass,
    ExperimentKind::EventProbe,
];

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::SminSurvey => "smin_survey",
            ExperimentKind::EsdSurvey => "esd_survey",
            ExperimentKind::ChainCensus => "chain_census",
            ExperimentKind::ShellGrowth => "shell_growth",
            ExperimentKind::BtSuccess => "bt_success",
            ExperimentKind::StieltjesCompare => "stieltjes_compare",
            ExperimentKind::TypeMass => "type_mass",
            ExperimentKind::EventProbe => "event_probe",
        };
        f.write_str(s)
    }
}

impl FromStr for ExperimentKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "smin_survey" => ExperimentKind::SminSurvey,
            "esd_survey" => ExperimentKind::EsdSurvey,
            "chain_census" => ExperimentKind::ChainCensus,
            "shell_growth" => ExperimentKind::ShellGrowth,
            "bt_success" => ExperimentKind::BtSuccess,
            "stieltjes_compare" => ExperimentKind::StieltjesCompare,
            "type_mass" => ExperimentKind::TypeMass,
            "event_probe" => ExperimentKind::EventProbe,
            other => return Err(LabError::Config(format!("unknown kind `{other}`"))),
        })
    }
}

/// Parses a complex literal like `0+1i`, `1.5-2i`, `3`, or `2i`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let t = s.trim();
    if let Some(v) = parse_g17(t) {
        return Ok(Complex64::new(v, 0.0));
    }
    if let Some(im_part) = t.strip_suffix('i') {
        // split at the sign of the imaginary part (not the leading sign and
        // not an exponent sign)
        let bytes = im_part.as_bytes();
        let mut split = None;
        for pos in (1..bytes.len()).rev() {
            let c = bytes[pos] as char;
            if (c == '+' || c == '-') && !matches!(bytes[pos - 1] as char, 'e' | 'E') {
                split = Some(pos);
                break;
            }
        }
        if let Some(pos) = split {
            let re = parse_g17(&im_part[..pos])
                .ok_or_else(|| LabError::Parse(format!("bad complex real part in `{s}`")))?;
            let im_str = &im_part[pos..];
            let im = if im_str == "+" {
                1.0
            } else if im_str == "-" {
                -1.0
            } else {
                parse_g17(im_str)
                    .ok_or_else(|| LabError::Parse(format!("bad complex imaginary part in `{s}`")))?
            };
            return Ok(Complex64::new(re, im));
        }
        // pure imaginary: `2i`, `i`, `-i`
        let im = match im_part {
            "" => 1.0,
            "-" => -1.0,
            "+" => 1.0,
            other => parse_g17(other)
                .ok_or_else(|| LabError::Parse(format!("bad complex literal `{s}`")))?,
        };
        return Ok(Complex64::new(0.0, im));
    }
    Err(LabError::Parse(format!("bad complex literal `{s}`")))
}

/// A fully validated experiment configuration with defaults applied.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub z: Complex64,
    pub dist: EntryDistribution,
    pub trials: usize,
    pub master_seed: u64,
    pub output_path: Option<String>,
    pub threads: Option<usize>,

    /// Type threshold override; the kinds default to `K_0/2` or `K_0`.
    pub k_param: Option<f64>,
    pub epsilon: f64,
    /// Chain length cap; defaults to `floor(log_{pn} n)` clamped to >= 1.
    pub k_max: Option<usize>,
    pub chain_cap: usize,
    pub eta: f64,
    pub rho: f64,
    pub bt_k: usize,
    pub bt_constants: BtConstants,
    pub l_threshold: f64,
    pub gaussian_mean: f64,
    pub t_marks: Vec<f64>,
    pub radii: Vec<f64>,
    pub eta_grid: Option<Vec<f64>>,
    pub q: Option<usize>,
    pub tau: f64,
    pub c_row: f64,
    pub delta: f64,
    pub depth: usize,
}

impl ExperimentConfig {
    pub fn pn(&self) -> f64 {
        self.p * self.n as f64
    }

    /// `floor(log_{pn} n)`, clamped to at least 1; the census length range.
    pub fn default_k_max(&self) -> usize {
        let pn = self.pn();
        if pn > 1.0 + 1e-9 {
            (((self.n as f64).ln() / pn.ln()).floor() as usize).max(1)
        } else {
            1
        }
    }

    pub fn effective_k_max(&self) -> usize {
        self.k_max.unwrap_or_else(|| self.default_k_max())
    }

    /// The canonical threshold `K_0 = pn / (2 alpha)`.
    pub fn k0(&self) -> f64 {
        crate::types_chains::canonical_k0(self.pn(), self.alpha)
    }

    /// Default Stieltjes evaluation grid: `eta = (pn)^{-1/20} * 2^t`.
    pub fn stieltjes_grid(&self) -> Vec<f64> {
        if let Some(g) = &self.eta_grid {
            return g.clone();
        }
        let base = self.pn().max(1.0 + 1e-9).powf(-1.0 / 20.0);
        (0..4).map(|t| base * (2.0f64).powi(t)).collect()
    }

    /// Canonical echo of every field, used by the report writers. Floats use
    /// the shortest exact representation, which re-parses bit-identically.
    pub fn echo(&self) -> Vec<(String, String)> {
        fn g(v: f64) -> String {
            format!("{v}")
        }
        let mut out = vec![
            ("kind".to_string(), self.kind.to_string()),
            ("n".to_string(), self.n.to_string()),
            ("p".to_string(), g(self.p)),
            ("alpha".to_string(), g(self.alpha)),
            ("z".to_string(), format!("{}{}{}i", g(self.z.re), if self.z.im < 0.0 { "" } else { "+" }, g(self.z.im))),
            ("dist".to_string(), self.dist.kind().to_string()),
            ("trials".to_string(), self.trials.to_string()),
            ("master_seed".to_string(), self.master_seed.to_string()),
            ("epsilon".to_string(), g(self.epsilon)),
            ("k_max".to_string(), self.effective_k_max().to_string()),
            ("chain_cap".to_string(), self.chain_cap.to_string()),
            ("eta".to_string(), g(self.eta)),
            ("rho".to_string(), g(self.rho)),
            ("bt_k".to_string(), self.bt_k.to_string()),
            ("c_tilde".to_string(), g(self.bt_constants.c_tilde)),
            ("c_hat".to_string(), g(self.bt_constants.c_hat)),
            ("c_cap".to_string(), g(self.bt_constants.c_cap)),
            ("c_low".to_string(), g(self.bt_constants.c_low)),
            ("l_threshold".to_string(), g(self.l_threshold)),
            ("gaussian_mean".to_string(), g(self.gaussian_mean)),
            ("tau".to_string(), g(self.tau)),
            ("c_row".to_string(), g(self.c_row)),
            ("delta".to_string(), g(self.delta)),
            ("depth".to_string(), self.depth.to_string()),
        ];
        if let Some(k) = self.k_param {
            out.push(("k_param".to_string(), g(k)));
        }
        if let Some(q) = self.q {
            out.push(("q".to_string(), q.to_string()));
        }
        out.push((
            "t_marks".to_string(),
            self.t_marks.iter().map(|v| g(*v)).collect::<Vec<_>>().join(";"),
        ));
        out.push((
            "radii".to_string(),
            self.radii.iter().map(|v| g(*v)).collect::<Vec<_>>().join(";"),
        ));
        out
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    parse_g17(value).ok_or_else(|| LabError::Config(format!("bad float for key `{key}`: `{value}`")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| LabError::Config(format!("bad integer for key `{key}`: `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(|c| c == ';' || c == ',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_f64(key, t.trim()))
        .collect()
}

/// Parses and validates a configuration document.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let mut kind = None;
    let mut n = None;
    let mut p = None;
    let mut alpha = None;
    let mut z = Complex64::new(0.0, 1.0);
    let mut dist = EntryDistribution::rademacher();
    let mut trials = None;
    let mut master_seed = None;
    let mut output_path = None;
    let mut threads = None;
    let mut k_param = None;
    let mut epsilon = 1.0 / 64.0;
    let mut k_max = None;
    let mut chain_cap = 1_000_000usize;
    let mut eta = 0.5;
    let mut rho = 1.0;
    let mut bt_k: Option<usize> = None;
    let mut bt = BtConstants::default();
    let mut l_threshold = 2.0;
    let mut gaussian_mean = 0.0;
    let mut t_marks = vec![1.0, 2.0, 4.0, 8.0];
    let mut radii = vec![0.3, 0.5, 0.8, 1.0];
    let mut eta_grid = None;
    let mut q = None;
    let mut tau = 0.5;
    let mut c_row = 4.0;
    let mut delta = 0.5;
    let mut depth = 3usize;

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        // accept `key=value`, `key = value`, and several pairs per line:
        // glue stray `=` tokens back onto their neighbors before splitting
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let mut pairs: Vec<String> = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            let t = tokens[i];
            if t == "=" {
                let prev = pairs.pop().ok_or_else(|| {
                    LabError::Config(format!("line {}: dangling `=`", lineno + 1))
                })?;
                let next = tokens.get(i + 1).ok_or_else(|| {
                    LabError::Config(format!("line {}: dangling `=`", lineno + 1))
                })?;
                pairs.push(format!("{prev}={next}"));
                i += 2;
            } else if t.ends_with('=') && i + 1 < tokens.len() && !tokens[i + 1].contains('=') {
                pairs.push(format!("{t}{}", tokens[i + 1]));
                i += 2;
            } else if t.starts_with('=') {
                let prev = pairs.pop().ok_or_else(|| {
                    LabError::Config(format!("line {}: dangling `=`", lineno + 1))
                })?;
                pairs.push(format!("{prev}{t}"));
                i += 1;
            } else {
                pairs.push(t.to_string());
                i += 1;
            }
        }
        for pair in &pairs {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| {
                    LabError::Config(format!("line {}: expected key=value, got `{pair}`", lineno + 1))
                })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "kind" => kind = Some(value.parse::<ExperimentKind>()?),
                "n" => n = Some(parse_usize(key, value)?),
                "p" => p = Some(parse_f64(key, value)?),
                "alpha" => alpha = Some(parse_f64(key, value)?),
                "z" => z = parse_complex(value)?,
                "dist" => dist = EntryDistribution::from_kind(value.parse::<DistKind>()?)?,
                "trials" => trials = Some(parse_usize(key, value)?),
                "master_seed" => {
                    master_seed = Some(value.parse::<u64>().map_err(|_| {
                        LabError::Config(format!("bad integer for key `master_seed`: `{value}`"))
                    })?)
                }
                "output_path" => output_path = Some(value.to_string()),
                "threads" => threads = Some(parse_usize(key, value)?),
                "k_param" => k_param = Some(parse_f64(key, value)?),
                "epsilon" => epsilon = parse_f64(key, value)?,
                "k_max" => k_max = Some(parse_usize(key, value)?),
                "chain_cap" => chain_cap = parse_usize(key, value)?,
                "eta" => eta = parse_f64(key, value)?,
                "rho" => rho = parse_f64(key, value)?,
                "bt_k" => bt_k = Some(parse_usize(key, value)?),
                "c_tilde" => bt.c_tilde = parse_f64(key, value)?,
                "c_hat" => bt.c_hat = parse_f64(key, value)?,
                "c_cap" => bt.c_cap = parse_f64(key, value)?,
                "c_low" => bt.c_low = parse_f64(key, value)?,
                "l_threshold" => l_threshold = parse_f64(key, value)?,
                "gaussian_mean" => gaussian_mean = parse_f64(key, value)?,
                "t_marks" => t_marks = parse_list(key, value)?,
                "radii" => radii = parse_list(key, value)?,
                "eta_grid" => eta_grid = Some(parse_list(key, value)?),
                "q" => q = Some(parse_usize(key, value)?),
                "tau" => tau = parse_f64(key, value)?,
                "c_row" => c_row = parse_f64(key, value)?,
                "delta" => delta = parse_f64(key, value)?,
                "depth" => depth = parse_usize(key, value)?,
                other => return Err(LabError::Config(format!("unknown key `{other}`"))),
            }
        }
    }

    let kind = kind.ok_or_else(|| LabError::Config("missing required key `kind`".to_string()))?;
    let n = n.ok_or_else(|| LabError::Config("missing required key `n`".to_string()))?;
    let p = p.ok_or_else(|| LabError::Config("missing required key `p`".to_string()))?;
    let alpha = alpha.ok_or_else(|| LabError::Config("missing required key `alpha`".to_string()))?;
    let trials = trials.ok_or_else(|| LabError::Config("missing required key `trials`".to_string()))?;
    let master_seed =
        master_seed.ok_or_else(|| LabError::Config("missing required key `master_seed`".to_string()))?;

    if n == 0 {
        return Err(LabError::Config("n out of range: must be at least 1".to_string()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(LabError::Config(format!("p out of range: {p} not in (0, 1]")));
    }
    if !(alpha >= 1.0) {
        return Err(LabError::Config(format!("alpha out of range: {alpha} < 1")));
    }
    if trials == 0 {
        return Err(LabError::Config("trials out of range: must be at least 1".to_string()));
    }
    // the expansion event takes eps in (0, 1]; the compression and shell
    // growth lemmas gate their stricter (0, 1/32) range themselves
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(LabError::Config(format!("epsilon out of range: {epsilon} not in (0, 1]")));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(LabError::Config(format!("eta out of range: {eta} not in (0, 1)")));
    }
    if !(rho > 0.0) {
        return Err(LabError::Config(format!("rho out of range: {rho} <= 0")));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(LabError::Config(format!("tau out of range: {tau} not in (0, 1)")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LabError::Config(format!("delta out of range: {delta} not in (0, 1]")));
    }
    if depth == 0 {
        return Err(LabError::Config("depth out of range: must be at least 1".to_string()));
    }
    let bt_k = bt_k.unwrap_or_else(|| 50.min(n));
    if kind == ExperimentKind::BtSuccess && (bt_k == 0 || bt_k > n) {
        return Err(LabError::Config(format!("bt_k out of range: {bt_k} not in [1, n]")));
    }
    if !(l_threshold >= 0.0) {
        return Err(LabError::Config(format!("l_threshold out of range: {l_threshold} < 0")));
    }

    Ok(ExperimentConfig {
        kind,
        n,
        p,
        alpha,
        z,
        dist,
        trials,
        master_seed,
        output_path,
        threads,
        k_param,
        epsilon,
        k_max,
        chain_cap,
        eta,
        rho,
        bt_k,
        bt_constants: bt,
        l_threshold,
        gaussian_mean,
        t_marks,
        radii,
        eta_grid,
        q,
        tau,
        c_row,
        delta,
        depth,
    })
}
