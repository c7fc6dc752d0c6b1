//! `lab`: run, validate, and self-test the random matrix experiments.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use circlaw_lab::error::LabError;
use circlaw_lab::experiments::{load_config, run_experiment, write_report, ReportFormat};
use circlaw_lab::{compression, graph, restricted_inv, sampling, shells, spectra, types_chains};

#[derive(Parser)]
#[command(name = "lab", about = "Sparse random matrix laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a key=value config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Output directory (default: current directory).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Output format.
        #[arg(long, default_value = "csv")]
        format: String,
        /// Worker threads (default: rayon's choice). Output is identical at
        /// any value.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and validate a config file without running it.
    Validate {
        config: PathBuf,
    },
    /// Run the deterministic-lemma property suites.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &LabError) -> u8 {
    match e {
        LabError::Config(_) | LabError::Parse(_) => 2,
        LabError::Io { .. } => 3,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, LabError> {
    match cli.command {
        Command::Run { config, out, format, threads } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| LabError::io(config.display().to_string(), e))?;
            let mut cfg = load_config(&text)?;
            if threads.is_some() {
                cfg.threads = threads;
            }
            let format: ReportFormat = format.parse()?;
            let report = run_experiment(&cfg)?;
            let stem = config
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| cfg.kind.to_string());
            let out_dir = cfg.output_path.clone().map(PathBuf::from).unwrap_or(out);
            let path = write_report(&report, &out_dir, &stem, format)?;
            println!(
                "wrote {} ({} rows, {} trial errors, {:.2}s)",
                path.display(),
                report.rows.len(),
                report.row_errors.len(),
                report.wall_clock_seconds
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| LabError::io(config.display().to_string(), e))?;
            let cfg = load_config(&text)?;
            println!("ok: {} with {} trials at n={}", cfg.kind, cfg.trials, cfg.n);
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            if selftest() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn report(name: &str, pass: bool, detail: &str) -> bool {
    println!("{} {name}{}", if pass { "PASS" } else { "FAIL" }, if detail.is_empty() {
        String::new()
    } else {
        format!(" ({detail})")
    });
    pass
}

/// Quick deterministic-lemma suites; each one is a compact version of the
/// corresponding integration test.
fn selftest() -> bool {
    let mut ok = true;
    ok &= report("hermitization_spectrum", selftest_hermitization(), "eig(H_z) = +-s_i");
    ok &= report("girko_identity", selftest_girko(), "log|det| vs sum log s_j");
    ok &= report("stieltjes_consistency", selftest_stieltjes(), "closed form vs resolvent");
    ok &= report("negative_second_moment", selftest_negsec(), "sum s^-2 vs sum dist^-2");
    ok &= report("type_hereditary", selftest_hereditary(), "subgraph layers nest");
    ok &= report("compression_types", selftest_compression(), "T_{K,g} preserved");
    ok &= report("shell_order_statistics", selftest_shells(), "constructed shells valid");
    ok &= report("projection_distance", selftest_bt_to_dist(), "qualifying >= l/2");
    ok
}

fn random_complex(n: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    })
}

fn selftest_hermitization() -> bool {
    for seed in 0..10 {
        let b = random_complex(20, seed);
        let sv = match spectra::singular_values(&b) {
            Ok(v) => v,
            Err(_) => return false,
        };
        let h = spectra::hermitize(&b).expect("square");
        let eig = spectra::hermitian_eigenvalues(&h).expect("hermitian");
        let mut expect: Vec<f64> = sv.iter().flat_map(|&s| [s, -s]).collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        for (e, x) in eig.iter().zip(&expect) {
            if (e - x).abs() > 1e-9 {
                return false;
            }
        }
    }
    true
}

fn selftest_girko() -> bool {
    for seed in 0..10 {
        let n = 16;
        let b = random_complex(n, 40 + seed);
        let sv = spectra::singular_values(&b).expect("finite");
        let via_sv: f64 = sv.iter().map(|s| s.ln()).sum::<f64>() / n as f64;
        let via_det = b.clone().lu().determinant().norm().ln() / n as f64;
        if (via_sv - via_det).abs() > 1e-9 {
            return false;
        }
    }
    true
}

fn selftest_stieltjes() -> bool {
    for seed in 0..6 {
        let b = random_complex(14, 80 + seed);
        let sv = spectra::singular_values(&b).expect("finite");
        let w = Complex64::new(0.1, 0.8);
        let closed = spectra::stieltjes(&sv, w).expect("upper half plane");
        let direct = spectra::stieltjes_resolvent_trace(&b, w).expect("upper half plane");
        if (closed - direct).norm() > 1e-9 {
            return false;
        }
    }
    true
}

fn selftest_negsec() -> bool {
    for seed in 0..10 {
        let b = random_complex(20, 200 + seed);
        let d = spectra::column_distances(&b).expect("square");
        match d.negsec_relative {
            Some(rel) if rel <= 1e-8 => {}
            _ => return false,
        }
    }
    true
}

fn selftest_hereditary() -> bool {
    let dist = sampling::EntryDistribution::standard_gaussian();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..50 {
        let a = sampling::sample_matrix(8, 0.4, 2.0, &dist, seed).expect("valid");
        let g = graph::build_graph(&a.complex_entries(), 2.0).expect("square");
        let parent = types_chains::classify_types(&g, 1.0);
        let removed: Vec<usize> = (0..8).filter(|_| rng.random::<f64>() < 0.3).collect();
        let (sub, map) = g.restrict_right(&removed);
        let child = types_chains::classify_types(&sub, 1.0);
        for (l, layer) in child.layers().iter().enumerate() {
            for &j in layer {
                let in_parent_prefix = (1..=l + 1).any(|h| parent.layer(h).contains(&map[j]));
                if !in_parent_prefix {
                    return false;
                }
            }
        }
    }
    true
}

fn selftest_compression() -> bool {
    let dist = sampling::EntryDistribution::rademacher();
    let mut checked = 0;
    for seed in 0..30u64 {
        let n = 48;
        let a = Arc::new(
            sampling::sample_matrix(n, 8.0 / n as f64, 2.0, &dist, seed).expect("valid"),
        );
        let b = sampling::shift_and_scale(&a, Complex64::new(0.0, 1.0), sampling::ScaleMode::Raw)
            .expect("raw");
        let g = graph::build_graph(b.values(), 2.0).expect("square");
        let k = types_chains::canonical_k0(a.pn(), 2.0) / 2.0;
        let partition = types_chains::classify_types(&g, k);
        let j_set: Vec<usize> = (0..n).collect();
        let built =
            compression::build_admissible_map(&g, &partition, &j_set, 0.03, a.pn(), seed)
                .expect("parameters valid");
        let Some(map) = built.ok() else { continue };
        if map.is_identity() {
            continue;
        }
        checked += 1;
        let comp = match compression::apply_compression(b.values(), 2.0, &map) {
            Ok(c) => c,
            Err(_) => return false,
        };
        let after = types_chains::classify_types(&comp.graph, k);
        if partition.layers() != after.layers() {
            return false;
        }
        for j in 0..n {
            if comp.graph.in_of_right(j).len() != g.in_of_right(j).len() {
                return false;
            }
        }
    }
    checked >= 10
}

fn selftest_shells() -> bool {
    let dist = sampling::EntryDistribution::standard_gaussian();
    let mut produced = 0;
    for seed in 0..40u64 {
        let n = 12;
        let a = sampling::sample_matrix(n, 0.35, 2.0, &dist, seed).expect("valid");
        let mut bm = a.complex_entries();
        for i in 0..n {
            bm[(i, i)] += Complex64::new(0.0, 1.0);
        }
        let k = 7;
        let top = bm.view_range(0..k, 0..n).into_owned();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = DVector::from_fn(n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let svd = top.clone().svd(true, true);
        let w = svd.solve(&(&top * &x0), 1e-12).expect("least squares");
        let x: DVector<Complex64> = &x0 - &w;
        let m_set: Vec<usize> = (k..n).collect();
        let stats = shells::order_stats(x.as_slice());
        let j_set: Vec<usize> = (0..n).filter(|&j| x[j].norm() >= stats[1].max(1e-9)).collect();
        if j_set.is_empty() {
            continue;
        }
        match shells::build_shell_from_vector(&bm, &x, &m_set, &j_set, 3, 2.0) {
            Ok(shells::ShellBuild::Shell(shell)) => {
                produced += 1;
                let g = graph::BipartiteDigraph::from_matrix(&bm, 2.0).expect("alpha >= 1");
                if !shells::validate_shell(&shell, &g).valid {
                    return false;
                }
            }
            Ok(shells::ShellBuild::HypothesisFailure { .. }) => continue,
            Err(_) => return false,
        }
    }
    produced >= 10
}

fn selftest_bt_to_dist() -> bool {
    // l = floor(c_tilde eta^3 rho^2 k) = floor(16 * 0.125 * 0.25 * 6) = 3
    let constants = restricted_inv::BtConstants { c_tilde: 16.0, ..Default::default() };
    let mut checked = 0;
    for seed in 0..30u64 {
        let n = 16;
        let k = 6;
        let b = random_complex(n, 3000 + seed);
        let v = match restricted_inv::spread_basis(
            &random_complex_tall(n, k, seed),
            1,
            8,
            seed,
        ) {
            Ok(restricted_inv::SpreadBasis::Found { basis, .. }) => basis.transpose(),
            _ => continue,
        };
        // rows of v: k x n orthonormal? basis is n x k orthonormal columns;
        // transpose gives k x n with orthonormal rows up to conjugation
        let v = v.conjugate();
        let subset = match restricted_inv::sample_bt_subset(
            &v,
            0.5,
            0.5,
            &constants,
            restricted_inv::BtSubsetMode::UniformL,
            seed,
        ) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let bv = &b * v.transpose();
        let s_bound = match spectra::singular_values(&bv) {
            Ok(sv) => sv[0],
            Err(_) => continue,
        };
        match restricted_inv::projection_bound_check(&b, &v, &subset, 0.5, 0.5, s_bound, &constants)
        {
            Ok(restricted_inv::ProjectionBoundVerdict::Checked { holds, .. }) => {
                checked += 1;
                if !holds {
                    return false;
                }
            }
            Ok(restricted_inv::ProjectionBoundVerdict::HypothesisNotMet { .. }) => continue,
            Err(_) => return false,
        }
    }
    checked >= 10
}

fn random_complex_tall(n: usize, k: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let g = DMatrix::from_fn(n, k, |_, _| {
        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    g.qr().q()
}
