//! Seeded generation of sparse random matrices and their shifted variants.
//!
//! The central object is [`MatrixSample`]: an `n x n` matrix with entries
//! `delta_ij * xi_ij`, where the mask `delta` is i.i.d. Bernoulli(p) and the
//! raw values `xi` are i.i.d. draws from an [`EntryDistribution`]. The mask
//! and value streams are seeded independently, so flipping one stream's seed
//! never disturbs the other. Raw values are generated for *all* cells (not
//! only masked ones) so that the frozen/replaced partition used by
//! [`hybrid_gaussianize`] is well defined.
//!
//! Everything here is a pure function of its arguments: identical inputs
//! produce bit-identical samples on any platform.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::textio::{fmt_g17, parse_g17};

/// Splitmix64 finalizer; the standard 64-bit bit mixer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a per-trial, per-stream seed from a master seed.
///
/// Counter-based so that Monte Carlo trials are order-independent and can be
/// generated in parallel. Distinct `(trial_index, stream_tag)` pairs collide
/// with probability consistent with a 64-bit hash. Stable across platforms.
pub fn derive_trial_seed(master_seed: u64, trial_index: u64, stream_tag: &str) -> u64 {
    let mut h = splitmix(master_seed ^ 0x243f_6a88_85a3_08d3);
    h = splitmix(h ^ trial_index.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    for &b in stream_tag.as_bytes() {
        h = splitmix(h ^ u64::from(b));
    }
    splitmix(h)
}

/// The distribution family of the raw values `xi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DistKind {
    /// +1 or -1 with equal probability.
    Rademacher,
    /// Real N(0, 1).
    StandardGaussian,
    /// Uniform on `[-width/2, width/2)`.
    UniformSymmetric { width: f64 },
    /// Finitely supported distribution given by atoms and probabilities.
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistKind::Rademacher => write!(f, "rademacher"),
            DistKind::StandardGaussian => write!(f, "standard_gaussian"),
            DistKind::UniformSymmetric { width } => {
                write!(f, "uniform_symmetric:{}", fmt_g17(*width))
            }
            DistKind::Discrete { values, probs } => {
                write!(f, "discrete:")?;
                for (i, (v, p)) in values.iter().zip(probs).enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{}:{}", fmt_g17(*v), fmt_g17(*p))?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for DistKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "rademacher" {
            return Ok(DistKind::Rademacher);
        }
        if s == "standard_gaussian" || s == "gaussian" {
            return Ok(DistKind::StandardGaussian);
        }
        if let Some(w) = s.strip_prefix("uniform_symmetric:") {
            let width = parse_g17(w)
                .ok_or_else(|| LabError::Parse(format!("bad uniform width `{w}`")))?;
            return Ok(DistKind::UniformSymmetric { width });
        }
        if let Some(body) = s.strip_prefix("discrete:") {
            let mut values = Vec::new();
            let mut probs = Vec::new();
            for atom in body.split(';') {
                let (v, p) = atom
                    .split_once(':')
                    .ok_or_else(|| LabError::Parse(format!("bad discrete atom `{atom}`")))?;
                values.push(
                    parse_g17(v).ok_or_else(|| LabError::Parse(format!("bad value `{v}`")))?,
                );
                probs.push(
                    parse_g17(p).ok_or_else(|| LabError::Parse(format!("bad prob `{p}`")))?,
                );
            }
            return Ok(DistKind::Discrete { values, probs });
        }
        Err(LabError::Parse(format!("unknown distribution kind `{s}`")))
    }
}

/// A validated entry distribution together with its mean and variance.
///
/// The stored mean/variance always agree with the analytic moments of the
/// kind (checked to 1e-12 on construction), so downstream code can trust the
/// declared values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryDistribution {
    kind: DistKind,
    mean: f64,
    variance: f64,
}

const MOMENT_TOL: f64 = 1e-12;

impl EntryDistribution {
    /// Builds from a kind, deriving the moments analytically.
    pub fn from_kind(kind: DistKind) -> Result<Self> {
        let (mean, variance) = Self::analytic_moments(&kind)?;
        Ok(EntryDistribution { kind, mean, variance })
    }

    /// Builds from a kind and *declared* moments, validating them against the
    /// analytic values.
    pub fn new(kind: DistKind, mean: f64, variance: f64) -> Result<Self> {
        let (am, av) = Self::analytic_moments(&kind)?;
        if (mean - am).abs() > MOMENT_TOL {
            return Err(LabError::Config(format!(
                "declared mean {mean} differs from analytic mean {am}"
            )));
        }
        if (variance - av).abs() > MOMENT_TOL {
            return Err(LabError::Config(format!(
                "declared variance {variance} differs from analytic variance {av}"
            )));
        }
        Ok(EntryDistribution { kind, mean, variance })
    }

    pub fn rademacher() -> Self {
        EntryDistribution { kind: DistKind::Rademacher, mean: 0.0, variance: 1.0 }
    }

    pub fn standard_gaussian() -> Self {
        EntryDistribution { kind: DistKind::StandardGaussian, mean: 0.0, variance: 1.0 }
    }

    pub fn uniform_symmetric(width: f64) -> Result<Self> {
        Self::from_kind(DistKind::UniformSymmetric { width })
    }

    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        Self::from_kind(DistKind::Discrete { values, probs })
    }

    fn analytic_moments(kind: &DistKind) -> Result<(f64, f64)> {
        match kind {
            DistKind::Rademacher => Ok((0.0, 1.0)),
            DistKind::StandardGaussian => Ok((0.0, 1.0)),
            DistKind::UniformSymmetric { width } => {
                if !width.is_finite() || *width <= 0.0 {
                    return Err(LabError::Config(format!("uniform width must be positive, got {width}")));
                }
                Ok((0.0, width * width / 12.0))
            }
            DistKind::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(LabError::Config(
                        "discrete distribution needs matching non-empty values/probs".to_string(),
                    ));
                }
                if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(LabError::Config("discrete probabilities out of [0,1]".to_string()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > MOMENT_TOL {
                    return Err(LabError::Config(format!(
                        "discrete probabilities sum to {total}, expected 1"
                    )));
                }
                let mean: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum();
                let second: f64 = values.iter().zip(probs).map(|(v, p)| v * v * p).sum();
                Ok((mean, second - mean * mean))
            }
        }
    }

    pub fn kind(&self) -> &DistKind {
        &self.kind
    }

    /// The mean, written `theta` in the shifted/frozen constructions.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Draws one value.
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match &self.kind {
            DistKind::Rademacher => {
                if rng.random::<f64>() < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            DistKind::StandardGaussian => StandardNormal.sample(rng),
            DistKind::UniformSymmetric { width } => (rng.random::<f64>() - 0.5) * width,
            DistKind::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().expect("non-empty by construction")
            }
        }
    }
}

/// A sparse random matrix `A = (delta_ij * xi_ij)` with its full provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSample {
    n: usize,
    p: f64,
    alpha: f64,
    seed: u64,
    dist: EntryDistribution,
    mask: DMatrix<bool>,
    xi: DMatrix<f64>,
    entries: DMatrix<f64>,
}

impl MatrixSample {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The expected number of nonzeros per row/column, `p * n`.
    pub fn pn(&self) -> f64 {
        self.p * self.n as f64
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dist(&self) -> &EntryDistribution {
        &self.dist
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn xi(&self) -> &DMatrix<f64> {
        &self.xi
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Coordinate-list view of the nonzero entries, row-major.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (0..n).filter_map(move |j| {
                if self.mask[(i, j)] {
                    Some((i, j, self.entries[(i, j)]))
                } else {
                    None
                }
            })
        })
    }

    /// The entries as a complex matrix (imaginary parts zero).
    pub fn complex_entries(&self) -> DMatrix<Complex64> {
        self.entries.map(|v| Complex64::new(v, 0.0))
    }
}

/// Samples a sparse matrix. Pure in all arguments.
///
/// The mask and value streams are derived from `seed` with distinct stream
/// tags; see [`sample_matrix_with_streams`] for direct control of the two
/// streams.
pub fn sample_matrix(
    n: usize,
    p: f64,
    alpha: f64,
    dist: &EntryDistribution,
    seed: u64,
) -> Result<MatrixSample> {
    let mask_seed = derive_trial_seed(seed, 0, "mask");
    let xi_seed = derive_trial_seed(seed, 0, "xi");
    sample_matrix_with_streams(n, p, alpha, dist, seed, mask_seed, xi_seed)
}

/// Samples with explicit stream seeds for the mask and the raw values.
pub fn sample_matrix_with_streams(
    n: usize,
    p: f64,
    alpha: f64,
    dist: &EntryDistribution,
    seed: u64,
    mask_seed: u64,
    xi_seed: u64,
) -> Result<MatrixSample> {
    if n == 0 {
        return Err(LabError::Config("matrix size n must be at least 1".to_string()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(LabError::Config(format!("probability p={p} out of [0,1]")));
    }
    if !(alpha >= 1.0) {
        return Err(LabError::Config(format!("alpha={alpha} must be >= 1")));
    }

    let mut mask_rng = ChaCha8Rng::seed_from_u64(mask_seed);
    let mut xi_rng = ChaCha8Rng::seed_from_u64(xi_seed);

    let mut mask = DMatrix::from_element(n, n, false);
    for i in 0..n {
        for j in 0..n {
            mask[(i, j)] = mask_rng.random::<f64>() < p;
        }
    }
    let mut xi = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            xi[(i, j)] = dist.sample(&mut xi_rng);
        }
    }
    let entries = DMatrix::from_fn(n, n, |i, j| if mask[(i, j)] { xi[(i, j)] } else { 0.0 });

    Ok(MatrixSample { n, p, alpha, seed, dist: dist.clone(), mask, xi, entries })
}

/// Scaling convention for the shift `sigma * A - z * Id`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleMode {
    /// `sigma = 1`; the singular-value / invertibility convention.
    Raw,
    /// `sigma = 1 / sqrt(p n)`; the circular-law normalization.
    Girko,
}

/// A shifted, optionally rescaled matrix `sigma * A - z * Id`.
#[derive(Clone, Debug)]
pub struct ShiftedMatrix {
    source: Arc<MatrixSample>,
    z: Complex64,
    scale: f64,
    shift_applied_after_scale: bool,
    values: DMatrix<Complex64>,
    a3_satisfied: Option<bool>,
    frozen_cells: Option<Vec<(usize, usize)>>,
}

impl ShiftedMatrix {
    pub fn source(&self) -> &Arc<MatrixSample> {
        &self.source
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift_applied_after_scale(&self) -> bool {
        self.shift_applied_after_scale
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn alpha(&self) -> f64 {
        self.source.alpha
    }

    /// Whether `|a_ij - z| >= 1/alpha` held for every realized entry.
    /// `None` in [`ScaleMode::Girko`]: the condition is stated for the raw
    /// convention only.
    pub fn a3_satisfied(&self) -> Option<bool> {
        self.a3_satisfied
    }

    /// The frozen cell set `Q` recorded by [`hybrid_gaussianize`], if this
    /// matrix is a hybrid.
    pub fn frozen_cells(&self) -> Option<&[(usize, usize)]> {
        self.frozen_cells.as_deref()
    }
}

/// Forms `sigma * A - z * Id` and evaluates the shift-compatibility scan.
pub fn shift_and_scale(source: &Arc<MatrixSample>, z: Complex64, mode: ScaleMode) -> Result<ShiftedMatrix> {
    let n = source.n();
    let scale = match mode {
        ScaleMode::Raw => 1.0,
        ScaleMode::Girko => {
            let pn = source.pn();
            if pn <= 0.0 {
                return Err(LabError::DegenerateParameters(
                    "girko scaling needs p*n > 0".to_string(),
                ));
            }
            1.0 / pn.sqrt()
        }
    };

    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = Complex64::new(scale * source.entries[(i, j)], 0.0);
            if i == j {
                v -= z;
            }
            values[(i, j)] = v;
        }
    }

    let a3_satisfied = match mode {
        ScaleMode::Girko => None,
        ScaleMode::Raw => {
            let inv_alpha = 1.0 / source.alpha;
            let mut ok = true;
            'scan: for i in 0..n {
                for j in 0..n {
                    if (Complex64::new(source.entries[(i, j)], 0.0) - z).norm() < inv_alpha {
                        ok = false;
                        break 'scan;
                    }
                }
            }
            Some(ok)
        }
    };

    Ok(ShiftedMatrix {
        source: Arc::clone(source),
        z,
        scale,
        shift_applied_after_scale: true,
        values,
        a3_satisfied,
        frozen_cells: None,
    })
}

/// Replaces every entry whose raw `xi` lies within `l_threshold` of `theta`
/// by an independent real Gaussian of the given mean and unit variance.
///
/// Cells with `|xi_ij - theta| > l_threshold` form the frozen set `Q` and are
/// kept bit-identical. The partition is decided by the raw values, which
/// exist for all cells, masked or not.
pub fn hybrid_gaussianize(
    b: &ShiftedMatrix,
    l_threshold: f64,
    theta: f64,
    gaussian_mean: f64,
    seed: u64,
) -> Result<ShiftedMatrix> {
    if l_threshold.is_nan() || l_threshold < 0.0 {
        return Err(LabError::Config(format!(
            "replacement threshold must be nonnegative, got {l_threshold}"
        )));
    }
    let n = b.n();
    let xi = b.source.xi();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = b.values.clone();
    let mut frozen = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if (xi[(i, j)] - theta).abs() > l_threshold {
                frozen.push((i, j));
            } else {
                let g: f64 = StandardNormal.sample(&mut rng);
                values[(i, j)] = Complex64::new(gaussian_mean + g, 0.0);
            }
        }
    }
    Ok(ShiftedMatrix {
        source: Arc::clone(&b.source),
        z: b.z,
        scale: b.scale,
        shift_applied_after_scale: b.shift_applied_after_scale,
        values,
        a3_satisfied: b.a3_satisfied,
        frozen_cells: Some(frozen),
    })
}

/// Parsed contents of a matrix file. Only nonzero cells are stored, so this
/// is a sparse view, not a full [`MatrixSample`].
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixFileData {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub seed: u64,
    pub dist_kind: DistKind,
    pub theta: f64,
    /// `(row, col, value)` triplets, 0-based, in file order.
    pub triplets: Vec<(usize, usize, Complex64)>,
}

impl MatrixFileData {
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, v) in &self.triplets {
            m[(i, j)] = v;
        }
        m
    }
}

fn write_matrix_lines<W: Write>(
    w: &mut W,
    path: &str,
    n: usize,
    p: f64,
    alpha: f64,
    seed: u64,
    dist: &EntryDistribution,
    cells: impl Iterator<Item = (usize, usize, Complex64)>,
) -> Result<()> {
    let io = |e| LabError::io(path, e);
    writeln!(
        w,
        "{} {} {} {} {} {}",
        n,
        fmt_g17(p),
        fmt_g17(alpha),
        seed,
        dist.kind(),
        fmt_g17(dist.mean()),
    )
    .map_err(io)?;
    for (i, j, v) in cells {
        writeln!(w, "{} {} {} {}", i, j, fmt_g17(v.re), fmt_g17(v.im)).map_err(io)?;
    }
    Ok(())
}

/// Writes a sample in the text format: header `n p alpha seed dist_kind
/// theta`, then one `i j re im` line per nonzero.
pub fn write_matrix_file<W: Write>(sample: &MatrixSample, w: &mut W, path: &str) -> Result<()> {
    write_matrix_lines(
        w,
        path,
        sample.n,
        sample.p,
        sample.alpha,
        sample.seed,
        &sample.dist,
        sample.nonzeros().map(|(i, j, v)| (i, j, Complex64::new(v, 0.0))),
    )
}

/// Writes a shifted matrix in the same format; nonzeros of the shifted values.
pub fn write_shifted_matrix_file<W: Write>(m: &ShiftedMatrix, w: &mut W, path: &str) -> Result<()> {
    let s = &m.source;
    let n = m.n();
    let cells = (0..n).flat_map(move |i| {
        (0..n).filter_map(move |j| {
            let v = m.values[(i, j)];
            if v != Complex64::ZERO {
                Some((i, j, v))
            } else {
                None
            }
        })
    });
    write_matrix_lines(w, path, n, s.p, s.alpha, s.seed, &s.dist, cells)
}

/// Reads the text format back. Values round-trip bit-exactly.
pub fn read_matrix_file<R: BufRead>(r: R, path: &str) -> Result<MatrixFileData> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| LabError::Parse(format!("{path}: empty matrix file")))?
        .map_err(|e| LabError::io(path, e))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    if tok.len() != 6 {
        return Err(LabError::Parse(format!(
            "{path}: header needs 6 fields, found {}",
            tok.len()
        )));
    }
    let n: usize = tok[0].parse().map_err(|_| LabError::Parse(format!("{path}: bad n")))?;
    let p = parse_g17(tok[1]).ok_or_else(|| LabError::Parse(format!("{path}: bad p")))?;
    let alpha = parse_g17(tok[2]).ok_or_else(|| LabError::Parse(format!("{path}: bad alpha")))?;
    let seed: u64 = tok[3].parse().map_err(|_| LabError::Parse(format!("{path}: bad seed")))?;
    let dist_kind: DistKind = tok[4].parse()?;
    let theta = parse_g17(tok[5]).ok_or_else(|| LabError::Parse(format!("{path}: bad theta")))?;

    let mut triplets = Vec::new();
    for line in lines {
        let line = line.map_err(|e| LabError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 4 {
            return Err(LabError::Parse(format!("{path}: bad triplet line `{line}`")));
        }
        let i: usize = t[0].parse().map_err(|_| LabError::Parse(format!("{path}: bad row index")))?;
        let j: usize = t[1].parse().map_err(|_| LabError::Parse(format!("{path}: bad col index")))?;
        let re = parse_g17(t[2]).ok_or_else(|| LabError::Parse(format!("{path}: bad re")))?;
        let im = parse_g17(t[3]).ok_or_else(|| LabError::Parse(format!("{path}: bad im")))?;
        if i >= n || j >= n {
            return Err(LabError::IndexOutOfRange(format!("{path}: cell ({i}, {j}) outside {n}x{n}")));
        }
        triplets.push((i, j, Complex64::new(re, im)));
    }
    Ok(MatrixFileData { n, p, alpha, seed, dist_kind, theta, triplets })
}
