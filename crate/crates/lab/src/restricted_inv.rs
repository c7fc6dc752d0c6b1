//! Randomized restricted invertibility: spread orthonormal bases, random
//! column-subset selection, condition verification, and the deterministic
//! projection-distance consequence.
//!
//! The probabilistic statement proves that a Bernoulli- or uniformly-chosen
//! column subset `J` of a k x n matrix `V` with orthonormal, well-spread
//! rows is well conditioned with probability at least `(c eta)^l`. The
//! constants are existential, so here they are configuration knobs
//! ([`BtConstants`]); the experiments report which values make the
//! guarantees hold empirically. The multi-stage extraction inside the
//! original proof is deliberately not implemented: the runnable form is
//! sample-then-verify, which is also what the downstream propositions
//! consume.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::shells::order_stats;

/// The unnamed constants of the restricted invertibility statement.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BtConstants {
    /// `l = floor(c_tilde eta^3 rho^2 k)`.
    pub c_tilde: f64,
    /// Success-rate reference `(c_hat eta)^l`.
    pub c_hat: f64,
    /// Column norm cap `sqrt(C k / (eta n))`.
    pub c_cap: f64,
    /// Lower bound scale `c_low rho sqrt(eta k / n)`.
    pub c_low: f64,
}

impl Default for BtConstants {
    fn default() -> Self {
        BtConstants { c_tilde: 0.01, c_hat: 0.1, c_cap: 16.0, c_low: 0.05 }
    }
}

/// One restricted-invertibility trial: the subset and its condition verdicts.
#[derive(Clone, Debug, Serialize)]
pub struct BtSample {
    pub eta: f64,
    pub rho: f64,
    pub k: usize,
    pub n: usize,
    pub ell: usize,
    pub subset: Vec<usize>,
    /// Condition (2): `||V_j|| <= sqrt(C k / (eta n))` for all `j` in the
    /// subset.
    pub cond_norm: bool,
    /// Condition (3): the k x |J| column submatrix has smallest singular
    /// value at least `c_low rho sqrt(eta k / n)`.
    pub cond_lower: bool,
    /// `+inf` for the empty subset.
    pub submatrix_smin: f64,
}

impl BtSample {
    pub fn all_conditions(&self) -> bool {
        self.cond_norm && self.cond_lower
    }
}

/// `l = floor(c_tilde eta^3 rho^2 k)`.
pub fn bt_subset_size(k: usize, eta: f64, rho: f64, constants: &BtConstants) -> usize {
    (constants.c_tilde * eta.powi(3) * rho * rho * k as f64).floor() as usize
}

fn check_orthonormal_rows(v: &DMatrix<Complex64>) -> Result<()> {
    let k = v.nrows();
    let gram = v * v.adjoint();
    for i in 0..k {
        for j in 0..k {
            let expect = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::ZERO };
            if (gram[(i, j)] - expect).norm() > 1e-10 {
                return Err(LabError::Config(format!(
                    "rows are not orthonormal: gram[{i}][{j}] = {}",
                    gram[(i, j)]
                )));
            }
        }
    }
    Ok(())
}

/// Outcome of the spread-basis search.
#[derive(Clone, Debug)]
pub enum SpreadBasis {
    /// Orthonormal basis of the subspace with `(u_j)*_s >= 1/(2 sqrt n)` for
    /// every vector.
    Found { basis: DMatrix<Complex64>, attempts: usize },
    /// No Haar draw satisfied the order-statistic condition.
    Failed { attempts: usize },
}

/// Searches for an orthonormal basis of `span(E)` whose vectors all have
/// `s`-th order statistic at least `1/(2 sqrt n)`.
///
/// `E` is an `n x k` matrix with orthonormal columns. Each attempt rotates
/// `E` by a Haar-random unitary (QR of a complex Ginibre draw with the phase
/// correction) and checks all `k` vectors; in the intended regime
/// `s <= c k / log(n/k)` a draw succeeds with probability at least 1/2.
pub fn spread_basis(
    e: &DMatrix<Complex64>,
    s: usize,
    max_attempts: usize,
    seed: u64,
) -> Result<SpreadBasis> {
    let (n, k) = e.shape();
    if k == 0 || k > n {
        return Err(LabError::Dimension(format!("subspace basis has shape {n} x {k}")));
    }
    if s == 0 || s > n {
        return Err(LabError::Config(format!("order statistic index s={s} outside [1, {n}]")));
    }
    check_orthonormal_rows(&e.adjoint())?;
    let threshold = 1.0 / (2.0 * (n as f64).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=max_attempts.max(1) {
        // Haar unitary on the k coordinates of the subspace
        let g = DMatrix::from_fn(k, k, |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..k {
            let d = r[(j, j)];
            if d != Complex64::ZERO {
                let phase = d / Complex64::new(d.norm(), 0.0);
                for i in 0..k {
                    q[(i, j)] *= phase;
                }
            }
        }
        let candidate = e * q;
        let ok = (0..k).all(|j| {
            let col: Vec<Complex64> = candidate.column(j).iter().copied().collect();
            order_stats(&col)[s - 1] >= threshold
        });
        if ok {
            return Ok(SpreadBasis::Found { basis: candidate, attempts: attempt });
        }
    }
    Ok(SpreadBasis::Failed { attempts: max_attempts.max(1) })
}

/// Subset sampling mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BtSubsetMode {
    /// Independent Bernoulli(l/n) coordinates; |J| fluctuates around l.
    Bernoulli,
    /// Uniform among the l-element subsets; |J| = l exactly.
    UniformL,
}

/// Checks the row-spread precondition `(row_j)*_{floor(eta n)} >= rho /
/// sqrt(n)`; returns false (a warning, not an error) when some row fails.
pub fn rows_are_spread(v: &DMatrix<Complex64>, eta: f64, rho: f64) -> bool {
    let (k, n) = v.shape();
    let mark = ((eta * n as f64).floor() as usize).clamp(1, n);
    let threshold = rho / (n as f64).sqrt();
    (0..k).all(|j| {
        let row: Vec<Complex64> = v.row(j).iter().copied().collect();
        order_stats(&row)[mark - 1] >= threshold * (1.0 - 1e-12)
    })
}

/// Draws a column subset in the requested mode.
pub fn sample_bt_subset(
    v: &DMatrix<Complex64>,
    eta: f64,
    rho: f64,
    constants: &BtConstants,
    mode: BtSubsetMode,
    seed: u64,
) -> Result<Vec<usize>> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(LabError::Config(format!("eta={eta} outside (0,1)")));
    }
    if !(rho > 0.0) {
        return Err(LabError::Config(format!("rho={rho} must be positive")));
    }
    check_orthonormal_rows(v)?;
    let (k, n) = v.shape();
    let ell = bt_subset_size(k, eta, rho, constants);
    if ell == 0 {
        return Err(LabError::DegenerateParameters(format!(
            "l = floor({} * {eta}^3 * {rho}^2 * {k}) = 0",
            constants.c_tilde
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subset = match mode {
        BtSubsetMode::Bernoulli => {
            let prob = (ell as f64 / n as f64).min(1.0);
            (0..n).filter(|_| rng.random::<f64>() < prob).collect()
        }
        BtSubsetMode::UniformL => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let mut take: Vec<usize> = idx.into_iter().take(ell.min(n)).collect();
            take.sort_unstable();
            take
        }
    };
    Ok(subset)
}

/// Evaluates conditions (2) and (3) on a given subset.
pub fn check_bt_conditions(
    v: &DMatrix<Complex64>,
    subset: &[usize],
    eta: f64,
    rho: f64,
    constants: &BtConstants,
) -> Result<BtSample> {
    let (k, n) = v.shape();
    for &j in subset {
        if j >= n {
            return Err(LabError::IndexOutOfRange(format!("column {j}")));
        }
    }
    let ell = bt_subset_size(k, eta, rho, constants);
    let norm_cap = (constants.c_cap * k as f64 / (eta * n as f64)).sqrt();
    let lower = constants.c_low * rho * (eta * k as f64 / n as f64).sqrt();

    let cond_norm = subset.iter().all(|&j| v.column(j).norm() <= norm_cap);
    let (submatrix_smin, cond_lower) = if subset.is_empty() {
        (f64::INFINITY, true)
    } else {
        let sub = v.select_columns(subset.iter());
        let smin = crate::spectra::singular_values(&sub)?
            .last()
            .copied()
            .expect("non-empty submatrix");
        // the submatrix has min(k, |J|) singular values; as a map from C^J
        // the smallest one is 0 whenever |J| > k
        let effective = if subset.len() > k { 0.0 } else { smin };
        (effective, effective >= lower)
    };

    Ok(BtSample {
        eta,
        rho,
        k,
        n,
        ell,
        subset: subset.to_vec(),
        cond_norm,
        cond_lower,
        submatrix_smin,
    })
}

/// Monte Carlo success-rate estimate with a Wilson 95% interval and the
/// `(c_hat eta)^l` reference rate.
#[derive(Clone, Debug, Serialize)]
pub struct BtSuccessRate {
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub lower_ref: f64,
    pub ell: usize,
    /// Whether the row-spread precondition held for `V`.
    pub rows_spread: bool,
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (((center - half) / denom).max(0.0), ((center + half) / denom).min(1.0))
}

/// Runs `trials` independent uniform-l draws and counts full-condition
/// successes. Per-trial seeds derive from the given seed, so runs are
/// order-independent.
pub fn bt_success_rate(
    v: &DMatrix<Complex64>,
    eta: f64,
    rho: f64,
    constants: &BtConstants,
    trials: usize,
    seed: u64,
) -> Result<BtSuccessRate> {
    if trials == 0 {
        return Err(LabError::Config("trials must be at least 1".to_string()));
    }
    let rows_spread = rows_are_spread(v, eta, rho);
    let mut successes = 0;
    let mut ell = 0;
    for t in 0..trials {
        let s = crate::sampling::derive_trial_seed(seed, t as u64, "bt-subset");
        let subset = sample_bt_subset(v, eta, rho, constants, BtSubsetMode::UniformL, s)?;
        let sample = check_bt_conditions(v, &subset, eta, rho, constants)?;
        ell = sample.ell;
        if sample.all_conditions() {
            successes += 1;
        }
    }
    let rate = successes as f64 / trials as f64;
    let (wilson_low, wilson_high) = wilson_interval(successes, trials);
    let lower_ref = (constants.c_hat * eta).powi(ell as i32);
    Ok(BtSuccessRate { trials, successes, rate, wilson_low, wilson_high, lower_ref, ell, rows_spread })
}

/// Partial discrete-Fourier frame: `k` orthonormal rows with all entries of
/// modulus `1/sqrt(n)`; the canonical spread test matrix.
pub fn partial_fourier_rows(k: usize, n: usize) -> Result<DMatrix<Complex64>> {
    if k == 0 || k > n {
        return Err(LabError::Dimension(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(DMatrix::from_fn(k, n, |j, t| {
        let angle = 2.0 * std::f64::consts::PI * (j as f64) * (t as f64) / (n as f64);
        Complex64::new(angle.cos() * scale, angle.sin() * scale)
    }))
}

/// Verdict of the deterministic projection-distance consequence.
#[derive(Clone, Debug)]
pub enum ProjectionBoundVerdict {
    HypothesisNotMet { which: String },
    /// All hypotheses verified; the conclusion demands
    /// `qualifying >= ceil(l/2)` and `holds` records it.
    Checked { qualifying: usize, ell: usize, bound: f64, holds: bool },
}

/// Checks: given `||B V^T|| <= s` and a subset satisfying conditions (2) and
/// (3), at least half the subset's columns of `B` have projections onto the
/// orthocomplement of the other columns bounded by
/// `sqrt(2) / (c_low rho) * sqrt(n/(eta k)) * s`.
pub fn projection_bound_check(
    b: &DMatrix<Complex64>,
    v: &DMatrix<Complex64>,
    subset: &[usize],
    eta: f64,
    rho: f64,
    s_bound: f64,
    constants: &BtConstants,
) -> Result<ProjectionBoundVerdict> {
    let n = b.nrows();
    if b.ncols() != n {
        return Err(LabError::Dimension("B must be square".to_string()));
    }
    if v.ncols() != n {
        return Err(LabError::Dimension(format!(
            "V has {} columns, B is {n} x {n}",
            v.ncols()
        )));
    }
    check_orthonormal_rows(v)?;
    let k = v.nrows();

    // hypothesis: operator norm of B V^T within the stated bound
    let bv = b * v.transpose();
    let op = crate::spectra::singular_values(&bv)?[0];
    if op > s_bound * (1.0 + 1e-12) {
        return Ok(ProjectionBoundVerdict::HypothesisNotMet {
            which: format!("||B V^T|| = {op} exceeds s = {s_bound}"),
        });
    }
    if !rows_are_spread(v, eta, rho) {
        return Ok(ProjectionBoundVerdict::HypothesisNotMet {
            which: "rows of V are not (eta, rho)-spread".to_string(),
        });
    }
    let sample = check_bt_conditions(v, subset, eta, rho, constants)?;
    if !sample.cond_norm {
        return Ok(ProjectionBoundVerdict::HypothesisNotMet {
            which: "condition (2) fails on the subset".to_string(),
        });
    }
    if !sample.cond_lower {
        return Ok(ProjectionBoundVerdict::HypothesisNotMet {
            which: "condition (3) fails on the subset".to_string(),
        });
    }
    let ell = subset.len();
    if ell == 0 {
        return Ok(ProjectionBoundVerdict::Checked { qualifying: 0, ell, bound: 0.0, holds: true });
    }

    // P_I: projection onto the orthocomplement of the non-subset columns
    let keep: Vec<usize> = (0..n).filter(|j| !subset.contains(j)).collect();
    let project_residual = |col: &DVector<Complex64>| -> f64 {
        if keep.is_empty() {
            return col.norm();
        }
        let others = b.select_columns(keep.iter());
        let q = others.qr().q();
        (col - &q * (q.adjoint() * col)).norm()
    };

    let bound = (2.0f64).sqrt() / (constants.c_low * rho) * (n as f64 / (eta * k as f64)).sqrt()
        * s_bound;
    let mut qualifying = 0;
    for &j in subset {
        let col: DVector<Complex64> = b.column(j).into_owned();
        if project_residual(&col) <= bound * (1.0 + 1e-12) {
            qualifying += 1;
        }
    }
    Ok(ProjectionBoundVerdict::Checked { qualifying, ell, bound, holds: 2 * qualifying >= ell })
}

/// Writes trial rows in the `trial,ell,|J|,cond_norm,cond_lower,
/// submatrix_smin` layout.
pub fn write_bt_trials_csv<W: std::io::Write>(
    samples: &[BtSample],
    w: &mut W,
    path: &str,
) -> Result<()> {
    let io = |e| LabError::io(path, e);
    writeln!(w, "trial,ell,|J|,cond_norm,cond_lower,submatrix_smin").map_err(io)?;
    for (t, s) in samples.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            t,
            s.ell,
            s.subset.len(),
            s.cond_norm,
            s.cond_lower,
            crate::textio::fmt_g17(s.submatrix_smin)
        )
        .map_err(io)?;
    }
    Ok(())
}
