//! Acceptance suite: every criterion runs at its stated size and tolerance
//! and prints one PASS/FAIL line (visible with `--nocapture`).

mod common;

use std::collections::HashSet;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use circlaw_lab::compression::{
    apply_compression, build_admissible_map, validate_map, AdmissibleMap, MapConstruction,
};
use circlaw_lab::compression::enumerate_phi_chains;
use circlaw_lab::experiments::{load_config, run_experiment};
use circlaw_lab::graph::{build_graph, BipartiteDigraph};
use circlaw_lab::restricted_inv::{
    check_bt_conditions, partial_fourier_rows, projection_bound_check, rows_are_spread,
    sample_bt_subset, BtConstants, BtSubsetMode, ProjectionBoundVerdict,
};
use circlaw_lab::sampling::{sample_matrix, shift_and_scale, EntryDistribution, ScaleMode};
use circlaw_lab::shells::{
    build_shell_from_vector, order_stats, shell_growth_check, validate_shell, GrowthVerdict,
    Shell, ShellBuild,
};
use circlaw_lab::spectra::{
    column_distances, eigenvalues, hermitian_eigenvalues, hermitize, singular_values, stieltjes,
    stieltjes_resolvent_trace, uniform_disc_cdf, UNIFORM_DISC_SECOND_MOMENT,
};
use circlaw_lab::types_chains::{classify_types, enumerate_chains, is_self_balancing, ChainKind};

use common::{c, ci, criterion};

fn random_complex(n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    common::random_gaussian_complex(n, n, rng)
}

#[test]
fn acceptance_01_negative_second_moment() {
    criterion(1, "negative second moment identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < 200 {
            // sizes up to 100, weighted toward the cheap end so the whole
            // pass stays inside the time budget
            let n = if done % 10 == 0 { rng.random_range(64..=100) } else { rng.random_range(5..=64) };
            let b = random_complex(n, &mut rng);
            let sv = singular_values(&b).map_err(|e| e.to_string())?;
            let cond = sv[0] / sv[n - 1];
            if !(cond.is_finite() && cond <= 1e4) {
                continue; // well-conditioned instances only
            }
            done += 1;
            let d = column_distances(&b).map_err(|e| e.to_string())?;
            let rel = d.negsec_relative.ok_or("identity skipped on nonsingular input")?;
            worst = worst.max(rel);
            if rel > 1e-8 {
                return Err(format!("relative gap {rel} at n={n} exceeds 1e-8"));
            }
        }
        Ok(format!("200 instances, worst relative gap {worst:.3e}"))
    });
}

#[test]
fn acceptance_02_hermitization() {
    criterion(2, "hermitization spectrum", || {
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        let mut worst: f64 = 0.0;
        for t in 0..100 {
            let n = rng.random_range(2..=128);
            let b = random_complex(n, &mut rng);
            let sv = singular_values(&b).map_err(|e| e.to_string())?;
            let eig = hermitian_eigenvalues(&hermitize(&b).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let mut expect: Vec<f64> = sv.iter().flat_map(|&s| [s, -s]).collect();
            expect.sort_by(|a, b| b.total_cmp(a));
            for (e, x) in eig.iter().zip(&expect) {
                let gap = (e - x).abs();
                worst = worst.max(gap);
                if gap > 1e-9 {
                    return Err(format!("trial {t} (n={n}): eigenvalue gap {gap} > 1e-9"));
                }
            }
        }
        Ok(format!("100 instances, worst multiset gap {worst:.3e}"))
    });
}

#[test]
fn acceptance_03_girko_identity() {
    criterion(3, "girko log-determinant identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < 100 {
            let n = rng.random_range(2..=64);
            let b = random_complex(n, &mut rng);
            let sv = singular_values(&b).map_err(|e| e.to_string())?;
            if sv[n - 1] <= 1e-8 {
                continue; // nonsingular instances per the criterion
            }
            done += 1;
            let via_sv: f64 = sv.iter().map(|s| s.ln()).sum::<f64>() / n as f64;
            let via_det = b.clone().lu().determinant().norm().ln() / n as f64;
            let gap = (via_sv - via_det).abs();
            worst = worst.max(gap);
            if gap > 1e-9 {
                return Err(format!("identity gap {gap} at n={n}"));
            }
        }
        Ok(format!("100 nonsingular instances, worst gap {worst:.3e}"))
    });
}

#[test]
fn acceptance_04_stieltjes_consistency() {
    criterion(4, "stieltjes closed form vs resolvent", || {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let mut worst: f64 = 0.0;
        for t in 0..50 {
            let n = rng.random_range(2..=64);
            let b = random_complex(n, &mut rng);
            let sv = singular_values(&b).map_err(|e| e.to_string())?;
            let w = ci(rng.random::<f64>() - 0.5, 0.05 + rng.random::<f64>());
            let closed = stieltjes(&sv, w).map_err(|e| e.to_string())?;
            let direct = stieltjes_resolvent_trace(&b, w).map_err(|e| e.to_string())?;
            let gap = (closed - direct).norm();
            worst = worst.max(gap);
            if gap > 1e-9 {
                return Err(format!("trial {t}: |closed - resolvent| = {gap}"));
            }
        }
        Ok(format!("50 instances, worst gap {worst:.3e}"))
    });
}

#[test]
fn acceptance_05_type_classification_oracle() {
    criterion(5, "type classification oracle", || {
        let mut rng = ChaCha8Rng::seed_from_u64(505);
        for t in 0..1000 {
            let m = rng.random_range(1..=8);
            let mat = common::random_pattern_matrix(m, m, 0.45, 0.5, rng.random::<bool>(), &mut rng);
            let g = BipartiteDigraph::from_matrix(&mat, 2.0).map_err(|e| e.to_string())?;
            let k = [0.0, 0.5, 1.0, 2.0, 3.0, 5.0][rng.random_range(0..6)];
            let fast = classify_types(&g, k);
            let oracle = common::oracle_classify(&g, k);
            if fast.layers() != oracle.as_slice() {
                return Err(format!("trial {t}: layers diverge at m={m}, K={k}"));
            }
        }
        Ok("1000 graphs, exact agreement".to_string())
    });
}

#[test]
fn acceptance_06_hereditary_property() {
    criterion(6, "hereditary property of type layers", || {
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        for t in 0..500 {
            let m = rng.random_range(2..=10);
            let mat = common::random_pattern_matrix(m, m, 0.4, 0.5, rng.random::<bool>(), &mut rng);
            let g = BipartiteDigraph::from_matrix(&mat, 2.0).map_err(|e| e.to_string())?;
            let k = [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)];
            let parent = classify_types(&g, k);
            let removed: Vec<usize> = (0..m).filter(|_| rng.random::<f64>() < 0.35).collect();
            let (sub, map) = g.restrict_right(&removed);
            let child = classify_types(&sub, k);
            for (l, layer) in child.layers().iter().enumerate() {
                for &j in layer {
                    let ok = (1..=l + 1).any(|h| parent.layer(h).contains(&map[j]));
                    if !ok {
                        return Err(format!(
                            "trial {t}: T_{{K,{}}}(G|I) vertex {} escapes the parent prefix",
                            l + 1,
                            map[j]
                        ));
                    }
                }
            }
        }
        Ok("500 random (G, I, K), exact inclusion".to_string())
    });
}

/// Finds one admissible pair on a small graph, if any.
fn find_admissible_pair(
    g: &BipartiteDigraph,
    infinite: &[usize],
) -> Option<(usize, usize)> {
    let n = g.n_left();
    for a in 0..n {
        for b in (a + 1)..n {
            let sa = g.out_of_left(a);
            let sb = g.out_of_left(b);
            let disjoint = sa.iter().all(|j| sb.binary_search(j).is_err());
            let inf = sa.iter().chain(sb.iter()).all(|j| infinite.binary_search(j).is_ok());
            if disjoint && inf {
                return Some((a, b));
            }
        }
    }
    None
}

#[test]
fn acceptance_07_compression_invariants() {
    criterion(7, "compression invariants and chain correspondence", || {
        // part 1: 200 constructed maps on desk-scale shifted matrices
        let dist = EntryDistribution::rademacher();
        let mut built = 0;
        let mut seed = 0u64;
        while built < 200 {
            seed += 1;
            if seed > 2000 {
                return Err(format!("construction starved: only {built} maps after 2000 seeds"));
            }
            let n = 64;
            let a = Arc::new(
                sample_matrix(n, 8.0 / n as f64, 2.0, &dist, seed).map_err(|e| e.to_string())?,
            );
            let b = shift_and_scale(&a, ci(0.0, 1.0), ScaleMode::Raw).map_err(|e| e.to_string())?;
            let g = build_graph(b.values(), 2.0).map_err(|e| e.to_string())?;
            let k = a.pn() / (2.0 * 2.0) / 2.0; // K_0/2 at alpha = 2
            let partition = classify_types(&g, k);
            let j_set: Vec<usize> = (0..n).collect();
            let map = match build_admissible_map(&g, &partition, &j_set, 0.03, a.pn(), seed)
                .map_err(|e| e.to_string())?
            {
                MapConstruction::Map(m) if !m.is_identity() => m,
                _ => continue,
            };
            built += 1;

            let v = validate_map(&map, &g, &partition);
            if !v.admissible {
                return Err(format!("seed {seed}: constructed map fails validation: {:?}", v.violations));
            }
            let comp = apply_compression(b.values(), 2.0, &map).map_err(|e| e.to_string())?;
            let after = classify_types(&comp.graph, k);
            if partition.layers() != after.layers() {
                return Err(format!("seed {seed}: type layers change under compression"));
            }
            for j in 0..n {
                if comp.graph.in_of_right(j).len() != g.in_of_right(j).len() {
                    return Err(format!("seed {seed}: in-degree of column {j} changed"));
                }
            }
        }

        // part 2: chain correspondence by cross-enumeration at m <= 8
        let mut rng = ChaCha8Rng::seed_from_u64(707);
        let mut nonvacuous_sb = 0;
        let mut instances = 0;
        while instances < 300 {
            let m = rng.random_range(3..=8);
            let density = rng.random_range(0.35..0.85);
            let mat = common::random_pattern_matrix(m, m, density, 0.9, true, &mut rng);
            let g = build_graph(&mat, 2.0).map_err(|e| e.to_string())?;
            let k = [1.0, 2.0, 3.0, 4.0][rng.random_range(0..4)];
            let partition = classify_types(&g, k);
            let infinite = partition.infinite_set();
            let Some(pair) = find_admissible_pair(&g, &infinite) else { continue };
            instances += 1;
            let phi = AdmissibleMap::from_pairs(m, &[pair], k).unwrap();
            let comp = apply_compression(&mat, 2.0, &phi).map_err(|e| e.to_string())?;
            let phi_partition = classify_types(&comp.graph, k);

            for len in 1..=4usize {
                let (chains, t1) = enumerate_chains(&g, len, None, 100_000).map_err(|e| e.to_string())?;
                let (phichains, t2) =
                    enumerate_phi_chains(&comp.graph, &phi, len, 100_000).map_err(|e| e.to_string())?;
                if t1 || t2 {
                    return Err("enumeration cap hit at m <= 8".to_string());
                }
                let chain_set: HashSet<Vec<usize>> =
                    chains.iter().map(|ch| ch.vertices().to_vec()).collect();
                let phi_set: HashSet<Vec<usize>> =
                    phichains.iter().map(|ch| ch.vertices().to_vec()).collect();

                // (i) every chain is a phi-chain
                for ch in &chain_set {
                    if !phi_set.contains(ch) {
                        return Err(format!("chain {ch:?} missing from phi-chains"));
                    }
                }
                // (ii) phi-chains avoiding the infinite type are chains
                for ch in &phichains {
                    let avoids = ch.vertices().iter().all(|&j| !partition.is_infinite(j));
                    if avoids && !chain_set.contains(ch.vertices()) {
                        return Err(format!(
                            "phi-chain {:?} avoids T_inf but is not a chain",
                            ch.vertices()
                        ));
                    }
                }
                // (iii)/(iv) self-balancing chains correspond bijectively
                let sb_of = |chs: &[circlaw_lab::types_chains::Chain],
                             graph: &BipartiteDigraph,
                             part: &circlaw_lab::types_chains::TypePartition,
                             kind: ChainKind| {
                    chs.iter()
                        .filter(|ch| ch.kind() == kind && is_self_balancing(ch, graph, part))
                        .map(|ch| ch.vertices().to_vec())
                        .collect::<HashSet<_>>()
                };
                for kind in [ChainKind::Cyclic, ChainKind::CycleFree] {
                    let plain = sb_of(&chains, &g, &partition, kind);
                    let compressed = sb_of(&phichains, &comp.graph, &phi_partition, kind);
                    if plain != compressed {
                        return Err(format!(
                            "self-balancing {kind:?} chains diverge: {} vs {}",
                            plain.len(),
                            compressed.len()
                        ));
                    }
                    nonvacuous_sb += plain.len();
                }
            }
        }
        if nonvacuous_sb == 0 {
            return Err("cross-enumeration never saw a self-balancing chain".to_string());
        }
        Ok(format!(
            "200 maps validated, 300 cross-enumerated instances, {nonvacuous_sb} self-balancing matches"
        ))
    });
}

#[test]
fn acceptance_08_shell_order_statistics() {
    criterion(8, "constructive shell lemma", || {
        let dist = EntryDistribution::standard_gaussian();
        let mut verified = 0;
        let mut attempts = 0u64;
        while verified < 500 {
            attempts += 1;
            if attempts > 5000 {
                return Err(format!("only {verified} verified instances after 5000 attempts"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(attempts);
            let n = rng.random_range(8..=64);
            let a = sample_matrix(n, 0.3, 2.0, &dist, attempts).map_err(|e| e.to_string())?;
            let mut bm = a.complex_entries();
            for i in 0..n {
                bm[(i, i)] += ci(0.0, 1.0);
            }
            let k_rows = rng.random_range(n / 2..n.max(2));
            let top = bm.view_range(0..k_rows, 0..n).into_owned();
            let x0 = DVector::from_fn(n, |_, _| {
                ci(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let svd = top.clone().svd(true, true);
            let w = svd.solve(&(&top * &x0), 1e-13).map_err(|e| e.to_string())?;
            let x: DVector<Complex64> = &x0 - &w;
            let m_set: Vec<usize> = (k_rows..n).collect();
            let stats = order_stats(x.as_slice());
            if stats[0] < 1e-6 {
                continue;
            }
            let j_set: Vec<usize> =
                (0..n).filter(|&j| x[j].norm() >= stats[1].max(1e-9)).collect();
            if j_set.is_empty() {
                continue;
            }
            let alpha = 2.0;
            let depth = rng.random_range(1..=4);
            let shell = match build_shell_from_vector(&bm, &x, &m_set, &j_set, depth, alpha)
                .map_err(|e| e.to_string())?
            {
                ShellBuild::Shell(s) => s,
                ShellBuild::HypothesisFailure { .. } => continue,
            };
            verified += 1;

            let g = BipartiteDigraph::from_matrix(&bm, alpha).map_err(|e| e.to_string())?;
            if !validate_shell(&shell, &g).valid {
                return Err(format!("attempt {attempts}: constructed shell is invalid"));
            }
            // order statistic conclusion, exact in float arithmetic when the
            // bound is folded by repeated division
            let outside: Vec<usize> = (0..n).filter(|i| !m_set.contains(i)).collect();
            let big_l: f64 = outside
                .iter()
                .map(|&i| (0..n).map(|j| bm[(i, j)].norm()).sum::<f64>())
                .fold(0.0, f64::max);
            let min_j = j_set.iter().map(|&j| x[j].norm()).fold(f64::INFINITY, f64::min);
            let mut bound = min_j;
            for (q, layer) in shell.layers().iter().enumerate() {
                if q > 0 {
                    bound /= 2.0 * alpha * big_l;
                }
                if q == 0 || layer.is_empty() {
                    continue;
                }
                let xs = stats[layer.len() - 1];
                if xs < bound {
                    return Err(format!(
                        "attempt {attempts}: x*_{{|C_{q}|}} = {xs} < {bound}"
                    ));
                }
            }
        }
        Ok("500 hypothesis-verified instances, shells valid, order statistics certified".to_string())
    });
}

#[test]
fn acceptance_09_shell_growth() {
    criterion(9, "shell growth lemma at exhaustive hypotheses", || {
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        let mut checked_valid = 0;
        let mut gated = 0;
        let mut no_shell = 0;
        for _ in 0..100 {
            let m = rng.random_range(4..=16);
            let mat = common::random_pattern_matrix(m, m, 0.35, 0.6, true, &mut rng);
            let g = build_graph(&mat, 2.0).unwrap();
            let k_param = [0.5, 1.0, 2.0, 4.0][rng.random_range(0..4)];
            let epsilon = rng.random_range(0.004..0.031);
            let delta = [0.5, 1.0][rng.random_range(0..2)];
            let partition = classify_types(&g, k_param);
            let infinite = partition.infinite_set();
            let center: Vec<usize> = if infinite.is_empty() {
                vec![0]
            } else {
                vec![infinite[rng.random_range(0..infinite.len())]]
            };
            let depth = rng.random_range(1..=3);
            let Some(layers) = common::closure_shell_layers(&g, &[], &center, depth) else {
                no_shell += 1;
                continue;
            };
            let shell = Shell::new(vec![], layers).unwrap();
            let g2 = g.clone();
            if !validate_shell(&shell, &g2).valid {
                return Err("closure shell failed validation".to_string());
            }
            match shell_growth_check(&shell, &g, k_param, epsilon, delta, &center) {
                GrowthVerdict::HypothesisNotMet { .. } => gated += 1,
                GrowthVerdict::Checked { holds, exhaustive, .. } => {
                    if !exhaustive {
                        return Err("m <= 16 must verify hypotheses exhaustively".to_string());
                    }
                    checked_valid += 1;
                    if !holds {
                        return Err(
                            "counterexample: verified hypotheses with violated growth bound"
                                .to_string(),
                        );
                    }
                }
            }
        }
        Ok(format!(
            "100 instances: {checked_valid} fully-verified (zero counterexamples), {gated} hypothesis-gated, {no_shell} without shells"
        ))
    });
}

#[test]
fn acceptance_10_projection_distance() {
    criterion(10, "projection-distance consequence", || {
        let mut rng = ChaCha8Rng::seed_from_u64(1010);
        let mut verified = 0;
        let mut attempts = 0;
        while verified < 500 {
            attempts += 1;
            if attempts > 5000 {
                return Err(format!("only {verified} verified after {attempts} attempts"));
            }
            let n = rng.random_range(12..=40);
            let k = rng.random_range(4..=(n / 2));
            let b = random_complex(n, &mut rng);
            let v = common::random_orthonormal_rows(k, n, &mut rng);
            // rho chosen from the realized rows so the spread precondition
            // verifies by construction
            let eta = 0.5;
            let mark = ((eta * n as f64).floor() as usize).max(1);
            let rho = (0..k)
                .map(|j| {
                    let row: Vec<Complex64> = v.row(j).iter().copied().collect();
                    order_stats(&row)[mark - 1] * (n as f64).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
                * 0.999;
            if !(rho > 0.0) || !rows_are_spread(&v, eta, rho) {
                continue;
            }
            let target_ell = 3.0;
            let constants = BtConstants {
                c_tilde: target_ell / (eta.powi(3) * rho * rho * k as f64) + 1e-9,
                ..Default::default()
            };
            let seed = rng.random::<u64>();
            let subset = match sample_bt_subset(&v, eta, rho, &constants, BtSubsetMode::UniformL, seed)
            {
                Ok(s) => s,
                Err(_) => continue,
            };
            let sample = check_bt_conditions(&v, &subset, eta, rho, &constants).unwrap();
            if !sample.all_conditions() {
                continue; // hypotheses must verify computationally
            }
            let bv = &b * v.transpose();
            let s_bound = singular_values(&bv).unwrap()[0];
            match projection_bound_check(&b, &v, &subset, eta, rho, s_bound, &constants).unwrap() {
                ProjectionBoundVerdict::Checked { qualifying, ell, holds, .. } => {
                    verified += 1;
                    if !holds {
                        return Err(format!(
                            "attempt {attempts}: only {qualifying} of {ell} columns qualify"
                        ));
                    }
                }
                ProjectionBoundVerdict::HypothesisNotMet { which } => {
                    return Err(format!("hypotheses re-verification failed: {which}"));
                }
            }
        }
        Ok("500 hypothesis-verified instances, conclusion held in every case".to_string())
    });
}

#[test]
fn acceptance_11_circular_law() {
    criterion(11, "circular law at desk scale", || {
        let dist = EntryDistribution::rademacher();
        let n = 1000;
        let p = 0.02;
        let radii = [0.3, 0.5, 0.8];
        let mut worst_cdf: f64 = 0.0;
        let mut worst_moment: f64 = 0.0;
        for trial in 0..5u64 {
            let a = Arc::new(
                sample_matrix(n, p, 2.0, &dist, 1100 + trial).map_err(|e| e.to_string())?,
            );
            let b = shift_and_scale(&a, Complex64::ZERO, ScaleMode::Girko)
                .map_err(|e| e.to_string())?;
            let eig = eigenvalues(b.values()).map_err(|e| e.to_string())?;
            for &r in &radii {
                let cdf = eig.iter().filter(|l| l.norm() <= r).count() as f64 / n as f64;
                let err = (cdf - uniform_disc_cdf(r)).abs();
                worst_cdf = worst_cdf.max(err);
                if err > 0.05 {
                    return Err(format!(
                        "trial {trial}: |cdf({r}) - {}| = {err:.4} > 0.05",
                        r * r
                    ));
                }
            }
            let moment = eig.iter().map(|l| l.norm_sqr()).sum::<f64>() / n as f64;
            let err = (moment - UNIFORM_DISC_SECOND_MOMENT).abs();
            worst_moment = worst_moment.max(err);
            if err > 0.1 {
                return Err(format!("trial {trial}: |moment - 0.5| = {err:.4} > 0.1"));
            }
        }
        Ok(format!(
            "5 trials at n=1000, pn=20: worst cdf err {worst_cdf:.4}, worst moment err {worst_moment:.4}"
        ))
    });
}

#[test]
fn acceptance_12_smallest_singular_value() {
    criterion(12, "smallest singular value positivity", || {
        let cfg = load_config(
            "kind=smin_survey n=500 p=0.02 alpha=2 z=0+1i trials=50 master_seed=1200",
        )
        .map_err(|e| e.to_string())?;
        let report = run_experiment(&cfg).map_err(|e| e.to_string())?;
        if !report.row_errors.is_empty() {
            return Err(format!("{} trial errors", report.row_errors.len()));
        }
        let smins: Vec<f64> = report.rows.iter().map(|r| r[2].as_f64().unwrap()).collect();
        let positive = smins.iter().filter(|&&s| s > 1e-10).count();
        if positive < 45 {
            return Err(format!("only {positive}/50 trials with s_min > 1e-10"));
        }
        // the survey emits the empirical distribution for the report
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = circlaw_lab::experiments::write_report(
            &report,
            dir.path(),
            "smin_survey",
            circlaw_lab::experiments::ReportFormat::Csv,
        )
        .map_err(|e| e.to_string())?;
        if !path.exists() {
            return Err("survey csv missing".to_string());
        }
        let min = smins.iter().copied().fold(f64::INFINITY, f64::min);
        let med = {
            let mut s = smins.clone();
            s.sort_by(f64::total_cmp);
            s[25]
        };
        Ok(format!("{positive}/50 positive, min {min:.3e}, median {med:.3e}"))
    });
}

#[test]
fn acceptance_13_self_balancing_census() {
    criterion(13, "self-balancing chain census", || {
        let dist = EntryDistribution::rademacher();
        let n = 2000;
        let p = 0.005; // pn = 10
        let alpha = 2.0;
        let k_param = (p * n as f64) / (2.0 * alpha) / 2.0; // K_0 / 2
        let k_max = ((n as f64).ln() / (p * n as f64).ln()).floor() as usize; // 3
        let mut per_k: Vec<Vec<f64>> = vec![Vec::new(); k_max];
        for trial in 0..20u64 {
            let a = Arc::new(
                sample_matrix(n, p, alpha, &dist, 1300 + trial).map_err(|e| e.to_string())?,
            );
            let b = shift_and_scale(&a, ci(0.0, 1.0), ScaleMode::Raw).map_err(|e| e.to_string())?;
            let g = build_graph(b.values(), alpha).map_err(|e| e.to_string())?;
            let partition = classify_types(&g, k_param);
            let rows = circlaw_lab::types_chains::chain_census(&g, &partition, k_max, 2_000_000)
                .map_err(|e| e.to_string())?;
            for row in &rows {
                if row.self_balancing_cyclic_found {
                    return Err(format!("trial {trial}: self-balancing cyclic chain at k={}", row.k));
                }
                if row.truncated {
                    return Err(format!("trial {trial}: census truncated at k={}", row.k));
                }
                per_k[row.k - 1].push(row.self_balancing_cf as f64);
            }
        }
        let medians: Vec<f64> = per_k
            .iter()
            .map(|v| {
                let mut s = v.clone();
                s.sort_by(f64::total_cmp);
                s[s.len() / 2]
            })
            .collect();
        for w in medians.windows(2) {
            if w[1] > w[0] {
                return Err(format!("median |I_k| increases: {medians:?}"));
            }
        }
        Ok(format!("20 trials, no cyclic self-balancing chains, median |I_k| = {medians:?}"))
    });
}

#[test]
fn acceptance_14_bt_success() {
    criterion(14, "restricted invertibility success rate", || {
        let k = 50;
        let n = 500;
        let eta = 0.5;
        let rho = 1.0;
        // l = floor(c_tilde eta^3 rho^2 k) = floor(0.8 * 0.125 * 50) = 5
        let constants = BtConstants { c_tilde: 0.8, ..Default::default() };
        let v = partial_fourier_rows(k, n).map_err(|e| e.to_string())?;
        if !rows_are_spread(&v, eta, rho) {
            return Err("fourier frame must satisfy the spread precondition".to_string());
        }
        let mut successes = 0;
        for trial in 0..2000u64 {
            let seed = circlaw_lab::sampling::derive_trial_seed(1400, trial, "bt-subset");
            let subset = sample_bt_subset(&v, eta, rho, &constants, BtSubsetMode::UniformL, seed)
                .map_err(|e| e.to_string())?;
            let sample = check_bt_conditions(&v, &subset, eta, rho, &constants)
                .map_err(|e| e.to_string())?;
            if sample.all_conditions() {
                successes += 1;
                // re-verify from scratch: a fresh condition evaluation on
                // the recorded subset must agree, and the lower verdict must
                // equal the smin comparison identically
                let again = check_bt_conditions(&v, &sample.subset, eta, rho, &constants)
                    .map_err(|e| e.to_string())?;
                if !(again.cond_norm && again.cond_lower) {
                    return Err(format!("trial {trial}: success does not re-verify"));
                }
                let threshold = constants.c_low * rho * (eta * k as f64 / n as f64).sqrt();
                if again.cond_lower != (again.submatrix_smin >= threshold) {
                    return Err(format!("trial {trial}: verdict/smin mismatch"));
                }
            }
        }
        if successes == 0 {
            return Err("observed success rate is zero".to_string());
        }
        Ok(format!("{successes}/2000 successful trials (rate {:.3})", successes as f64 / 2000.0))
    });
}

#[test]
fn acceptance_15_reproducibility() {
    criterion(15, "byte-identical reports at any thread count", || {
        for kind in [
            "smin_survey",
            "esd_survey",
            "chain_census",
            "shell_growth",
            "bt_success",
            "stieltjes_compare",
            "type_mass",
            "event_probe",
        ] {
            let base = format!(
                "kind={kind} n=40 p=0.2 alpha=2 z=0+1i trials=6 master_seed=15 bt_k=10 c_tilde=2"
            );
            let mut bodies = Vec::new();
            for threads in [1usize, 2, 8] {
                let cfg = load_config(&format!("{base} threads={threads}"))
                    .map_err(|e| e.to_string())?;
                let rep = run_experiment(&cfg).map_err(|e| e.to_string())?;
                bodies.push(rep.to_csv().map_err(|e| e.to_string())?);
            }
            if bodies[0] != bodies[1] || bodies[1] != bodies[2] {
                return Err(format!("kind {kind} differs across thread counts"));
            }
            // and a repeated run with the same thread count
            let cfg = load_config(&format!("{base} threads=2")).map_err(|e| e.to_string())?;
            let again = run_experiment(&cfg).map_err(|e| e.to_string())?.to_csv().unwrap();
            if again != bodies[1] {
                return Err(format!("kind {kind} differs across repeated runs"));
            }
        }
        Ok("8 kinds x 3 thread counts x repeat: identical csv bodies".to_string())
    });
}

// keep the helper imports exercised even when criteria skip branches
#[allow(dead_code)]
fn _type_anchor(_: &EntryDistribution) -> Complex64 {
    c(0.0)
}
