//! Singular values, hermitization, Stieltjes transforms, log potentials,
//! spectral-measure metrics, and column-distance identities.
//!
//! The dense decompositions are backed by nalgebra; the accuracy contract
//! (1e-10 relative singular values, backward-stable eigenvalues at the sizes
//! used here) is what the tests pin down, not the backend. Every quantity
//! with an algebraic double (hermitization spectrum, Girko determinant
//! identity, closed-form versus resolvent Stieltjes transform, negative
//! second moment) keeps both routes available so they can be played against
//! each other.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::sampling::ShiftedMatrix;
use crate::shells::order_stats;

fn ensure_finite(b: &DMatrix<Complex64>) -> Result<()> {
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            let v = b[(i, j)];
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(LabError::NonFiniteEntry(i, j));
            }
        }
    }
    Ok(())
}

/// Full singular value list, non-increasing.
pub fn singular_values(b: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    ensure_finite(b)?;
    let mut sv: Vec<f64> = b.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// The smallest singular value.
pub fn smallest_singular_value(b: &DMatrix<Complex64>) -> Result<f64> {
    let sv = singular_values(b)?;
    sv.last().copied().ok_or_else(|| LabError::Dimension("empty matrix".to_string()))
}

/// The `2n x 2n` Hermitian block matrix `[[0, B], [B^*, 0]]`; its spectrum
/// is the singular values of `B` and their negatives.
pub fn hermitize(b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if b.nrows() != b.ncols() {
        return Err(LabError::Dimension(format!(
            "hermitization needs a square input, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    let n = b.nrows();
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, n), (n, n)).copy_from(b);
    h.view_mut((n, 0), (n, n)).copy_from(&b.adjoint());
    Ok(h)
}

/// Eigenvalues of a Hermitian matrix, non-increasing.
pub fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    ensure_finite(h)?;
    if h.nrows() != h.ncols() {
        return Err(LabError::Dimension("hermitian eigenvalues need a square input".to_string()));
    }
    let mut eig: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

/// Closed-form Stieltjes transform of the hermitized singular-value measure:
/// `m_w = (1/2n) sum_i [ 1/(s_i - w) + 1/(-s_i - w) ]`, `Im w > 0`.
pub fn stieltjes(sv: &[f64], w: Complex64) -> Result<Complex64> {
    if !(w.im > 0.0) {
        return Err(LabError::Domain(format!("stieltjes needs Im w > 0, got {}", w.im)));
    }
    if sv.is_empty() {
        return Err(LabError::Dimension("empty singular value list".to_string()));
    }
    let n = sv.len() as f64;
    let sum: Complex64 = sv
        .iter()
        .map(|&s| {
            (Complex64::new(s, 0.0) - w).inv() + (Complex64::new(-s, 0.0) - w).inv()
        })
        .sum();
    Ok(sum / (2.0 * n))
}

/// Direct resolvent route: `(1/2n) tr (H_z - w Id)^{-1}` by LU inversion of
/// the hermitization. Independent of the singular value decomposition.
pub fn stieltjes_resolvent_trace(bz: &DMatrix<Complex64>, w: Complex64) -> Result<Complex64> {
    if !(w.im > 0.0) {
        return Err(LabError::Domain(format!("stieltjes needs Im w > 0, got {}", w.im)));
    }
    let h = hermitize(bz)?;
    let two_n = h.nrows();
    let shifted = &h - DMatrix::from_diagonal_element(two_n, two_n, w);
    let inv = shifted
        .lu()
        .try_inverse()
        .ok_or_else(|| LabError::Numerical("resolvent is singular".to_string()))?;
    let trace: Complex64 = (0..two_n).map(|i| inv[(i, i)]).sum();
    Ok(trace / two_n as f64)
}

/// Log potential `(1/n) sum log s_j` with the tail integrals of `|log s|`.
#[derive(Clone, Debug, Serialize)]
pub struct LogPotentialReport {
    /// `-inf` when the matrix is singular (some `s_j = 0`).
    pub log_potential: f64,
    pub is_singular: bool,
    pub zero_count: usize,
    /// `(T, (1/n) sum_{|log s_j| > T} |log s_j|)` over the nonzero values.
    pub tail_integrals: Vec<(f64, f64)>,
}

/// Evaluates the log potential of the singular value measure. Zero singular
/// values set the `-inf` flag rather than failing, so spectral surveys can
/// proceed past structurally singular samples.
pub fn log_potential_report(bz: &DMatrix<Complex64>, t_marks: &[f64]) -> Result<LogPotentialReport> {
    let sv = singular_values(bz)?;
    log_potential_from_singular_values(&sv, t_marks)
}

/// Same report computed from precomputed singular values.
pub fn log_potential_from_singular_values(
    sv: &[f64],
    t_marks: &[f64],
) -> Result<LogPotentialReport> {
    if sv.is_empty() {
        return Err(LabError::Dimension("empty singular value list".to_string()));
    }
    let n = sv.len() as f64;
    let zero_count = sv.iter().filter(|&&s| s == 0.0).count();
    let is_singular = zero_count > 0;
    let log_potential = if is_singular {
        f64::NEG_INFINITY
    } else {
        sv.iter().map(|&s| s.ln()).sum::<f64>() / n
    };
    let tail_integrals = t_marks
        .iter()
        .map(|&t| {
            let mass: f64 = sv
                .iter()
                .filter(|&&s| s > 0.0)
                .map(|&s| s.ln().abs())
                .filter(|&a| a > t)
                .sum();
            (t, mass / n)
        })
        .collect();
    Ok(LogPotentialReport { log_potential, is_singular, zero_count, tail_integrals })
}

/// Eigenvalues with the radial distribution metrics used by the circular-law
/// survey.
#[derive(Clone, Debug, Serialize)]
pub struct EsdMetrics {
    pub eigenvalues: Vec<Complex64>,
    /// `(r, #{ |lambda| <= r } / n)` at the requested radii.
    pub radial_cdf: Vec<(f64, f64)>,
    /// `(1/n) sum |lambda|^2`.
    pub second_abs_moment: f64,
}

/// Radial CDF of the uniform measure on the unit disc.
pub fn uniform_disc_cdf(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        (r * r).min(1.0)
    }
}

/// `E |lambda|^2` of the uniform measure on the unit disc.
pub const UNIFORM_DISC_SECOND_MOMENT: f64 = 0.5;

/// Eigenvalues of a general square complex matrix. A real-valued input is
/// routed through the real Schur form, which is both faster and what the
/// circular-law surveys feed in.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    ensure_finite(m)?;
    if m.nrows() != m.ncols() {
        return Err(LabError::Dimension("eigenvalues need a square matrix".to_string()));
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let all_real = m.iter().all(|v| v.im == 0.0);
    if all_real {
        let mr = m.map(|v| v.re);
        let schur = Schur::try_new(mr, f64::EPSILON, 0)
            .ok_or_else(|| LabError::Numerical("real schur iteration failed".to_string()))?;
        Ok(schur.complex_eigenvalues().iter().copied().collect())
    } else {
        let schur = Schur::try_new(m.clone(), f64::EPSILON, 0)
            .ok_or_else(|| LabError::Numerical("complex schur iteration failed".to_string()))?;
        let eig = schur
            .eigenvalues()
            .ok_or_else(|| LabError::Numerical("schur form not triangular".to_string()))?;
        Ok(eig.iter().copied().collect())
    }
}

/// Eigenvalues plus radial metrics.
pub fn esd_metrics(m: &DMatrix<Complex64>, radii: &[f64]) -> Result<EsdMetrics> {
    let eigenvalues = self::eigenvalues(m)?;
    let n = eigenvalues.len() as f64;
    let radial_cdf = radii
        .iter()
        .map(|&r| {
            let count = eigenvalues.iter().filter(|l| l.norm() <= r).count();
            (r, count as f64 / n)
        })
        .collect();
    let second_abs_moment = eigenvalues.iter().map(|l| l.norm_sqr()).sum::<f64>() / n;
    Ok(EsdMetrics { eigenvalues, radial_cdf, second_abs_moment })
}

/// Distances from each column to the span of the others, the unit normals
/// realizing them, and the negative-second-moment cross-check.
#[derive(Clone, Debug)]
pub struct ColumnDistances {
    pub distances: Vec<f64>,
    /// Unit normal to the span of the other columns; computed from those
    /// columns only, so it is independent of column `j` itself.
    pub normals: Vec<DVector<Complex64>>,
    /// `|<nu_j, col_j>|`; equals `distances[j]` when the other columns have
    /// full rank.
    pub normal_products: Vec<f64>,
    /// `|sum s_j^{-2} - sum dist_j^{-2}| / sum s_j^{-2}`; `None` when the
    /// matrix is singular or a distance vanishes.
    pub negsec_relative: Option<f64>,
}

/// Computes all column distances by per-column QR of the remaining columns.
///
/// O(n^4) in total, which is the intended desk-scale trade: re-factorizing
/// keeps every distance independent of the others.
pub fn column_distances(b: &DMatrix<Complex64>) -> Result<ColumnDistances> {
    ensure_finite(b)?;
    let n = b.nrows();
    if n != b.ncols() {
        return Err(LabError::Dimension("column distances need a square matrix".to_string()));
    }
    if n == 0 {
        return Err(LabError::Dimension("empty matrix".to_string()));
    }
    let mut distances = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut normal_products = Vec::with_capacity(n);
    for j in 0..n {
        let col: DVector<Complex64> = b.column(j).into_owned();
        if n == 1 {
            // span of no columns: the distance is the norm itself
            let d = col.norm();
            distances.push(d);
            let nu = if d > 0.0 { &col / Complex64::new(d, 0.0) } else { DVector::from_element(1, Complex64::new(1.0, 0.0)) };
            normal_products.push(nu.dotc(&col).norm());
            normals.push(nu);
            continue;
        }
        let others = b.clone().remove_column(j);
        let qr = others.qr();
        let q = qr.q();
        // ||(I - QQ^H) col||^2 = ||col||^2 - ||Q^H col||^2
        let coeffs = q.adjoint() * &col;
        let dist2 = (col.norm_squared() - coeffs.norm_squared()).max(0.0);
        distances.push(dist2.sqrt());

        // unit normal from the other columns only: orthogonalize the basis
        // vector with the smallest projection onto span(Q); for a projector
        // P = QQ^H the diagonal is P_ii = ||row_i(Q)||^2
        let mut idx = 0;
        let mut smallest = f64::INFINITY;
        for i in 0..n {
            let pii = q.row(i).norm_squared();
            if pii < smallest {
                smallest = pii;
                idx = i;
            }
        }
        let e_coeffs = q.row(idx).adjoint();
        let mut raw: DVector<Complex64> = -(&q * e_coeffs);
        raw[idx] += Complex64::new(1.0, 0.0);
        let norm = raw.norm();
        let nu = if norm > 0.0 {
            raw / Complex64::new(norm, 0.0)
        } else {
            DVector::from_element(n, Complex64::ZERO)
        };
        normal_products.push(nu.dotc(&col).norm());
        normals.push(nu);
    }

    let sv = singular_values(b)?;
    let negsec_relative = if sv.iter().all(|&s| s > 0.0) && distances.iter().all(|&d| d > 0.0) {
        let lhs: f64 = sv.iter().map(|&s| s.powi(-2)).sum();
        let rhs: f64 = distances.iter().map(|&d| d.powi(-2)).sum();
        Some((lhs - rhs).abs() / lhs)
    } else {
        None
    };

    Ok(ColumnDistances { distances, normals, normal_products, negsec_relative })
}

/// `Max_r(x)`: the `floor(r)` indices of largest modulus, smallest index on
/// ties.
pub fn max_modulus_set(x: &[Complex64], r: f64) -> Vec<usize> {
    let take = (r.max(0.0).floor() as usize).min(x.len());
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].norm().total_cmp(&x[a].norm()).then(a.cmp(&b)));
    let mut head: Vec<usize> = idx.into_iter().take(take).collect();
    head.sort_unstable();
    head
}

/// Per-row evaluation of the concentration event.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RowEventFlags {
    pub row: usize,
    /// `sum_j |a_ij| <= C pn`.
    pub l1_ok: bool,
    /// `a_ij = 0` on `Max_{q/2}(x)`.
    pub support_zero_ok: bool,
    /// `|<row_i, x>| >= (1/2 alpha) x*_q`.
    pub inner_ok: bool,
}

impl RowEventFlags {
    pub fn event(&self) -> bool {
        self.l1_ok && self.support_zero_ok && self.inner_ok
    }
}

/// The statistic `S(x)` with its per-row breakdown.
#[derive(Clone, Debug, Serialize)]
pub struct RowEventReport {
    /// Count of rows outside `Max_q(x)` satisfying all three clauses.
    pub s_count: usize,
    pub flags: Vec<RowEventFlags>,
    pub x_q_star: f64,
}

/// Evaluates the row event for every row outside `Max_q(x)`. The row l1 cap
/// constant is existential in the source bound, so it is a parameter
/// (default 4 in the experiment harness).
pub fn row_event_diagnostic(
    b: &ShiftedMatrix,
    x: &DVector<Complex64>,
    q: usize,
    tau: f64,
    c_row: f64,
) -> Result<RowEventReport> {
    let n = b.n();
    if x.len() != n {
        return Err(LabError::Dimension(format!("vector length {} vs matrix size {n}", x.len())));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(LabError::Config(format!("tau={tau} outside (0,1)")));
    }
    let p = b.source().p();
    let lo = (tau / p).ceil();
    let hi = (1.0 / p).floor();
    if (q as f64) < lo || q as f64 > hi {
        return Err(LabError::Domain(format!(
            "q={q} outside [ceil(tau/p), floor(1/p)] = [{lo}, {hi}]"
        )));
    }
    let alpha = b.alpha();
    let pn = b.source().pn();
    let values = b.values();

    let max_q = max_modulus_set(x.as_slice(), q as f64);
    let max_q_half = max_modulus_set(x.as_slice(), q as f64 / 2.0);
    let stats = order_stats(x.as_slice());
    let x_q_star = stats[q - 1];
    let threshold = x_q_star / (2.0 * alpha);

    let mut flags = Vec::new();
    let mut s_count = 0;
    for i in 0..n {
        if max_q.binary_search(&i).is_ok() {
            continue;
        }
        let l1: f64 = (0..n).map(|j| values[(i, j)].norm()).sum();
        let l1_ok = l1 <= c_row * pn;
        let support_zero_ok = max_q_half.iter().all(|&j| values[(i, j)] == Complex64::ZERO);
        let inner: Complex64 = (0..n).map(|j| values[(i, j)] * x[j]).sum();
        let inner_ok = inner.norm() >= threshold;
        let f = RowEventFlags { row: i, l1_ok, support_zero_ok, inner_ok };
        if f.event() {
            s_count += 1;
        }
        flags.push(f);
    }
    Ok(RowEventReport { s_count, flags, x_q_star })
}

/// The assembled per-matrix spectral summary.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub singular_values: Vec<f64>,
    pub eigenvalues: Option<Vec<Complex64>>,
    pub s_min: f64,
    pub log_potential: f64,
    pub is_singular: bool,
    pub tail_integrals: Vec<(f64, f64)>,
    /// `(w, m_w)` samples of the Stieltjes transform.
    pub stieltjes_samples: Vec<(Complex64, Complex64)>,
}

/// Builds the full report for a shifted matrix: singular values, log
/// potential at the given tail marks, and Stieltjes samples at the given
/// upper-half-plane points. Eigenvalues are included on request.
pub fn spectral_report(
    bz: &DMatrix<Complex64>,
    t_marks: &[f64],
    stieltjes_points: &[Complex64],
    with_eigenvalues: bool,
) -> Result<SpectralReport> {
    let sv = singular_values(bz)?;
    let lp = log_potential_from_singular_values(&sv, t_marks)?;
    let mut samples = Vec::with_capacity(stieltjes_points.len());
    for &w in stieltjes_points {
        samples.push((w, stieltjes(&sv, w)?));
    }
    let eigenvalues = if with_eigenvalues { Some(eigenvalues(bz)?) } else { None };
    let s_min = *sv.last().expect("non-empty");
    Ok(SpectralReport {
        s_min,
        eigenvalues,
        log_potential: lp.log_potential,
        is_singular: lp.is_singular,
        tail_integrals: lp.tail_integrals,
        stieltjes_samples: samples,
        singular_values: sv,
    })
}

/// Writes `index,singular_value` rows.
pub fn write_singular_values_csv<W: std::io::Write>(sv: &[f64], w: &mut W, path: &str) -> Result<()> {
    let io = |e| LabError::io(path, e);
    writeln!(w, "index,singular_value").map_err(io)?;
    for (i, s) in sv.iter().enumerate() {
        writeln!(w, "{},{}", i, crate::textio::fmt_g17(*s)).map_err(io)?;
    }
    Ok(())
}

/// Writes `index,re_lambda,im_lambda` rows.
pub fn write_eigenvalues_csv<W: std::io::Write>(
    eig: &[Complex64],
    w: &mut W,
    path: &str,
) -> Result<()> {
    let io = |e| LabError::io(path, e);
    writeln!(w, "index,re_lambda,im_lambda").map_err(io)?;
    for (i, l) in eig.iter().enumerate() {
        writeln!(w, "{},{},{}", i, crate::textio::fmt_g17(l.re), crate::textio::fmt_g17(l.im))
            .map_err(io)?;
    }
    Ok(())
}
