//! File-format round trips and pinned report schemas.

mod common;

use std::io::Cursor;

use proptest::prelude::*;

use circlaw_lab::experiments::{columns_for, load_config, run_experiment};
use circlaw_lab::graph::{build_graph, read_graph_file, write_graph_file};
use circlaw_lab::sampling::{
    read_matrix_file, sample_matrix, write_matrix_file, DistKind, EntryDistribution,
};
use circlaw_lab::textio::{fmt_g17, parse_g17};

proptest! {
    #[test]
    fn g17_round_trips_every_f64(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(!v.is_nan());
        let s = fmt_g17(v);
        let back = parse_g17(&s).unwrap();
        prop_assert_eq!(back.to_bits(), v.to_bits(), "{} -> {}", v, s);
    }

    #[test]
    fn matrix_file_round_trips(seed in 0u64..500, n in 1usize..12, p in 0.0f64..=1.0) {
        let dist = EntryDistribution::standard_gaussian();
        let s = sample_matrix(n, p, 1.5, &dist, seed).unwrap();
        let mut buf = Vec::new();
        write_matrix_file(&s, &mut buf, "mem").unwrap();
        let back = read_matrix_file(Cursor::new(&buf), "mem").unwrap();
        prop_assert_eq!(back.n, n);
        prop_assert_eq!(back.p.to_bits(), p.to_bits());
        prop_assert_eq!(back.seed, seed);
        prop_assert_eq!(back.to_dense(), s.complex_entries());
    }
}

#[test]
fn shifted_matrix_file_round_trips() {
    use circlaw_lab::sampling::{shift_and_scale, write_shifted_matrix_file, ScaleMode};
    use std::sync::Arc;
    let dist = EntryDistribution::rademacher();
    let a = Arc::new(sample_matrix(8, 0.3, 2.0, &dist, 44).unwrap());
    let b = shift_and_scale(&a, num_complex::Complex64::new(0.25, 1.0), ScaleMode::Raw).unwrap();
    let mut buf = Vec::new();
    write_shifted_matrix_file(&b, &mut buf, "mem").unwrap();
    let back = read_matrix_file(Cursor::new(&buf), "mem").unwrap();
    assert_eq!(back.to_dense(), *b.values());
}

#[test]
fn discrete_dist_token_round_trips() {
    let d = DistKind::Discrete { values: vec![1.0, -2.5, 0.125], probs: vec![0.25, 0.25, 0.5] };
    let token = d.to_string();
    let back: DistKind = token.parse().unwrap();
    assert_eq!(back, d);
}

#[test]
fn graph_dump_round_trips_random_graphs() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let m = common::random_pattern_matrix(6, 6, 0.4, 0.5, false, &mut rng);
        let g = build_graph(&m, 2.0).unwrap();
        let mut buf = Vec::new();
        write_graph_file(&g, &mut buf, "mem").unwrap();
        let back = read_graph_file(Cursor::new(&buf), "mem").unwrap();
        assert_eq!(g, back);
    }
}

#[test]
fn smin_survey_schema_is_pinned() {
    let cfg =
        load_config("kind=smin_survey n=16 p=0.25 alpha=2 z=0+1i trials=3 master_seed=9").unwrap();
    assert_eq!(columns_for(&cfg), vec!["trial", "seed", "s_min", "a3_satisfied"]);
    let rep = run_experiment(&cfg).unwrap();
    let csv = rep.to_csv().unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "trial,seed,s_min,a3_satisfied");
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn census_schema_is_pinned() {
    let cfg = load_config("kind=chain_census n=16 p=0.25 alpha=2 z=0+1i trials=2 master_seed=9")
        .unwrap();
    let rep = run_experiment(&cfg).unwrap();
    let csv = rep.to_csv().unwrap();
    assert!(csv.starts_with(
        "trial,seed,k,cycle_free,cyclic,self_balancing_cf,self_balancing_cyclic_found,truncated\n"
    ));
}

#[test]
fn bt_schema_matches_interface() {
    let cfg = load_config(
        "kind=bt_success n=40 p=0.5 alpha=1 trials=3 master_seed=2 bt_k=8 c_tilde=2 eta=0.5 rho=1",
    )
    .unwrap();
    let rep = run_experiment(&cfg).unwrap();
    let csv = rep.to_csv().unwrap();
    assert!(csv.starts_with("trial,ell,|J|,cond_norm,cond_lower,submatrix_smin\n"));
}

#[test]
fn json_report_round_trips_row_floats() {
    let cfg =
        load_config("kind=smin_survey n=12 p=0.3 alpha=2 z=0+1i trials=4 master_seed=3").unwrap();
    let rep = run_experiment(&cfg).unwrap();
    let doc = rep.to_json();
    let text = serde_json::to_string_pretty(&doc).unwrap();
    let back: serde_json::Value = serde_json::from_str(&text).unwrap();
    for (r, row) in rep.rows.iter().enumerate() {
        let s_min = row[2].as_f64().unwrap();
        let from_json = back["rows"][r][2].as_f64().unwrap();
        assert_eq!(s_min.to_bits(), from_json.to_bits(), "row {r} float must round trip");
    }
}

#[test]
fn written_files_appear_with_requested_format() {
    use circlaw_lab::experiments::{write_report, ReportFormat};
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        load_config("kind=smin_survey n=10 p=0.3 alpha=2 z=0+1i trials=2 master_seed=4").unwrap();
    let rep = run_experiment(&cfg).unwrap();
    let csv_path = write_report(&rep, dir.path(), "t", ReportFormat::Csv).unwrap();
    let json_path = write_report(&rep, dir.path(), "t", ReportFormat::Json).unwrap();
    assert!(csv_path.ends_with("t.csv") && csv_path.exists());
    assert!(json_path.ends_with("t.json") && json_path.exists());
    let body = std::fs::read_to_string(csv_path).unwrap();
    assert!(body.starts_with("trial,seed,s_min,a3_satisfied\n"));
}
