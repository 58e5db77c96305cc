use std::fs;
use std::path::Path;

use gptcm::evaluation::summarize;
use gptcm::io::{
    chains::write_binary_chain, read_dataset, read_fit, read_graph, verify_manifest, write_dataset, write_fit,
    write_graph, write_summary, JobConfig, RunManifest, StoreFormat,
};
use gptcm::mcmc::{run_fit, RunConfig, Trace};
use gptcm::model::types::{ModelSpec, Variant};
use gptcm::simulation::{simulate_gptcm, SimConfig};
use gptcm::GptcmError;

fn small_dataset() -> (gptcm::model::SurvivalDataset, SimConfig) {
    let cfg = SimConfig::low_dim().with_n(30).with_seed(11);
    (simulate_gptcm(&cfg).unwrap().0, cfg)
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn dataset_round_trip_is_byte_identical() {
    let (ds, _) = small_dataset();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_dataset(&ds, a.path()).unwrap();
    let back = read_dataset(a.path()).unwrap();
    assert_eq!(back, ds);
    write_dataset(&back, b.path()).unwrap();
    assert_eq!(read_all(a.path()), read_all(b.path()));
}

#[test]
fn seventeen_digits_preserve_awkward_floats() {
    for x in [0.1, 1.0 / 3.0, f64::MIN_POSITIVE, 5e-324, 1.7976931348623157e308, -2.5e-10] {
        assert_eq!(gptcm::io::fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}

#[test]
fn proportion_row_off_simplex_names_the_row() {
    let (ds, _) = small_dataset();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&ds, dir.path()).unwrap();
    let path = dir.path().join("proportions.csv");
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[4] = "0.5,0.28,0.2".into();
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let err = read_dataset(dir.path()).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, GptcmError::InvalidData(_)), "{msg}");
    assert!(msg.contains("row 3"), "{msg}");
    assert!(msg.contains("0.98"), "{msg}");
}

#[test]
fn missing_block_is_named() {
    let (ds, _) = small_dataset();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&ds, dir.path()).unwrap();
    fs::remove_file(dir.path().join("X2.csv")).unwrap();
    let msg = read_dataset(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("X2.csv"), "{msg}");
    assert!(msg.contains("cell type 2"), "{msg}");
}

#[test]
fn schema_errors_are_listed_together() {
    let (ds, _) = small_dataset();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&ds, dir.path()).unwrap();
    fs::remove_file(dir.path().join("X3.csv")).unwrap();
    let surv = dir.path().join("survival.csv");
    let text = fs::read_to_string(&surv).unwrap().replacen("time,event,clinical1", "time,status,clinical1", 1);
    fs::write(&surv, text).unwrap();
    let x1 = dir.path().join("X1.csv");
    let mut lines: Vec<String> = fs::read_to_string(&x1).unwrap().lines().map(str::to_string).collect();
    let mut cells: Vec<&str> = lines[2].split(',').collect();
    cells[3] = "abc";
    lines[2] = cells.join(",");
    fs::write(&x1, lines.join("\n") + "\n").unwrap();

    let GptcmError::InvalidData(errs) = read_dataset(dir.path()).unwrap_err() else {
        panic!("expected a data error")
    };
    assert!(errs.iter().any(|e| e.contains("X3.csv")), "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("'status'")), "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("X1.csv row 1 column 'x4'")), "{errs:?}");
}

#[test]
fn row_count_mismatch_names_the_file() {
    let (ds, _) = small_dataset();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&ds, dir.path()).unwrap();
    let x1 = dir.path().join("X1.csv");
    let text = fs::read_to_string(&x1).unwrap();
    let trimmed: Vec<&str> = text.lines().take(10).collect();
    fs::write(&x1, trimmed.join("\n") + "\n").unwrap();
    let msg = read_dataset(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("X1.csv: 9 rows"), "{msg}");
}

#[test]
fn graph_round_trip() {
    let (_, cfg) = small_dataset();
    let g = cfg.graph(-2.0, 0.2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.csv");
    write_graph(&g, &path).unwrap();
    let back = read_graph(&path, g.dim(), -2.0, 0.2).unwrap();
    assert_eq!(back.edges(), g.edges());
}

fn tiny_fit() -> (gptcm::mcmc::FitResult, gptcm::model::SurvivalDataset) {
    let (ds, cfg) = small_dataset();
    let spec = ModelSpec::new(Variant::Mrf2);
    let g = cfg.graph(spec.hyper.mrf_sparsity(), 0.2).unwrap();
    let spec = spec.with_graphs(Some(g.clone()), Some(g));
    let run = RunConfig {
        n_iterations: 160,
        n_warmup: 40,
        n_chains: 2,
        seed: 3,
        record_pointwise: true,
        ..Default::default()
    };
    (run_fit(&spec, &ds, &run, Some(1)).unwrap(), ds)
}

#[test]
fn chain_store_round_trips_in_both_formats() {
    let (mut fit, _) = tiny_fit();
    // Wall-clock time lives in the manifest, not the store.
    for c in &mut fit.chains {
        c.elapsed_secs = 0.0;
    }
    for format in [StoreFormat::Csv, StoreFormat::Binary] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_fit(&fit, a.path(), format).unwrap();
        let back = read_fit(a.path()).unwrap();
        assert_eq!(back, fit, "{format:?}");
        write_fit(&back, b.path(), format).unwrap();
        assert_eq!(read_all(a.path()), read_all(b.path()), "{format:?}");
    }
}

#[test]
fn binary_layout_matches_documentation() {
    let mut t = Trace::new("kappa", vec!["kappa".into()]);
    t.push(&[1.5]);
    t.push(&[-0.25]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.bin");
    write_binary_chain(&path, &[7, 8], &[&t]).unwrap();
    let mut want = Vec::new();
    want.extend(b"GPTCMCH1");
    want.extend(1u32.to_le_bytes());
    want.extend(2u64.to_le_bytes());
    want.extend(7u64.to_le_bytes());
    want.extend(8u64.to_le_bytes());
    want.extend(5u32.to_le_bytes());
    want.extend(b"kappa");
    want.extend(1u32.to_le_bytes());
    want.extend(5u32.to_le_bytes());
    want.extend(b"kappa");
    want.extend(1.5f64.to_le_bytes());
    want.extend((-0.25f64).to_le_bytes());
    assert_eq!(fs::read(&path).unwrap(), want);
}

#[test]
fn corrupted_binary_store_is_rejected() {
    let (fit, _) = tiny_fit();
    let dir = tempfile::tempdir().unwrap();
    write_fit(&fit, dir.path(), StoreFormat::Binary).unwrap();
    let path = dir.path().join("chain1.bin");
    let mut bytes = fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 3);
    fs::write(&path, &bytes).unwrap();
    let msg = read_fit(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("chain1.bin") && msg.contains("truncated"), "{msg}");
}

#[test]
fn summary_tables_are_deterministic() {
    let (fit, _) = tiny_fit();
    let s = summarize(&fit).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_summary(&s, a.path()).unwrap();
    write_summary(&summarize(&read_fit_via(&fit)).unwrap(), b.path()).unwrap();
    assert_eq!(read_all(a.path()), read_all(b.path()));
    let header = fs::read_to_string(a.path().join("indicators.csv")).unwrap();
    assert!(header.starts_with("name,mpip,selected,mpm_coefficient\n"));
}

fn read_fit_via(fit: &gptcm::mcmc::FitResult) -> gptcm::mcmc::FitResult {
    let dir = tempfile::tempdir().unwrap();
    write_fit(fit, dir.path(), StoreFormat::Csv).unwrap();
    read_fit(dir.path()).unwrap()
}

#[test]
fn manifest_verifies_and_detects_tampering() {
    let (ds, _) = small_dataset();
    let input = tempfile::tempdir().unwrap();
    write_dataset(&ds, input.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    fs::write(out.path().join("result.txt"), "42\n").unwrap();
    let cfg = JobConfig::default();
    let mut m = RunManifest::new("fit", &cfg, 9, Some(Variant::Mrf2));
    m.add_input_dir(input.path()).unwrap();
    m.add_outputs(out.path(), &["result.txt".to_string()]).unwrap();
    m.write(out.path()).unwrap();
    assert!(verify_manifest(out.path()).unwrap().is_empty());
    assert_eq!(RunManifest::read(out.path()).unwrap().config, cfg);

    fs::write(out.path().join("result.txt"), "43\n").unwrap();
    fs::write(input.path().join("X1.csv"), "x1\n").unwrap();
    let problems = verify_manifest(out.path()).unwrap();
    assert_eq!(problems.len(), 2, "{problems:?}");
}

#[test]
fn job_config_parses_partial_json_and_rejects_unknown_keys() {
    let cfg = JobConfig::from_json(
        r#"{"preset": "high-dim", "simulation": {"n": 50}, "variant": "Ber1", "run": {"n_iterations": 9000}}"#,
    )
    .unwrap();
    assert_eq!(cfg.variant, Variant::Ber1);
    assert_eq!(cfg.run.n_iterations, 9000);
    assert_eq!(cfg.run.n_warmup, RunConfig::default().n_warmup);
    let sim = cfg.sim_config().unwrap();
    assert_eq!((sim.n, sim.p), (50, 200));

    let err = JobConfig::from_json(r#"{"iterations": 5}"#).unwrap_err();
    assert!(err.to_string().contains("iterations"), "{err}");
    let err = JobConfig::from_json(r#"{"simulation": {"noise": 1}}"#).unwrap().sim_config().unwrap_err();
    assert!(err.to_string().contains("noise"), "{err}");
    assert_ne!(JobConfig::default().hash(), cfg.hash());
}
