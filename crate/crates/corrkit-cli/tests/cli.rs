//! End-to-end tests of the installed binary: exit-code contract, output
//! cardinality and determinism, provenance embedding.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use corrkit::cluster_expansion::{
    correlation_vector, ring_pair_orbit, ring_point_orbit, BasisChoice, ClusterExpansionModel,
    Configuration,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_corrkit"))
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn assert_exit(output: &Output, want: i32) {
    let got = output.status.code().expect("no exit code");
    assert_eq!(
        got,
        want,
        "exit {got}, wanted {want}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn parse_stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout should be JSON")
}

#[test]
fn sweep_emits_six_canonical_records() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[output]\ndir = \"{}\"\n\n[qre]\ngeometry = \"{}\"\ncutoffs_ry = [13.0, 30.0, 40.0]\nframework = \"both\"\n",
            out.display(),
            data_dir().join("mg_dimer.xyz").display()
        ),
    )
    .unwrap();

    let output = run(&["qre", "sweep", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 0);

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("qre_sweep.json")).unwrap())
            .unwrap();
    assert_eq!(doc["tool"], "corrkit");
    assert_eq!(doc["version"], env!("CARGO_PKG_VERSION"));
    assert!(doc["config"]["qre"]["cutoffs_ry"].is_array(), "config echo missing");
    let records = doc["records"].as_array().unwrap();
    assert_eq!(records.len(), 6, "3 cutoffs x 2 frameworks");

    // canonical order: framework, then cutoff
    let keys: Vec<(String, f64)> = records
        .iter()
        .map(|r| {
            (
                r["framework"].as_str().unwrap().to_string(),
                r["cutoff_ry"].as_f64().unwrap(),
            )
        })
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    assert_eq!(keys, sorted);

    let csv = std::fs::read_to_string(out.join("qre_sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# corrkit"));
    assert!(lines[1].starts_with("# config:"));
    assert!(lines[2].starts_with("model,framework,cutoff_ry"));
    assert_eq!(lines.len(), 3 + 6, "one CSV row per record");

    // the 30 Ry first-quantized row carries the published-scale numbers
    let first_30 = records
        .iter()
        .find(|r| r["framework"] == "first" && r["cutoff_ry"] == 30.0)
        .unwrap();
    let qubits = first_30["estimate"]["logical_qubits"].as_u64().unwrap();
    assert!((1948..=2636).contains(&qubits), "qubits {qubits} outside +-15% of 2292");
}

#[test]
fn kmc_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[output]\ndir = \"{}\"\n\n[kmc]\na_bohr = 6.24\ndims = [3, 3, 3]\ntemperatures_k = [1700.0, 2100.0]\nn_steps = 1500\nn_trajectories = 24\nseed = 99\n\n[kmc.barrier]\nkind = \"uniform\"\nbarrier_ev = 1.1\n",
            out.display()
        ),
    )
    .unwrap();

    let args = ["kmc", "run", "--config", config.to_str().unwrap()];
    assert_exit(&run(&args), 0);
    let csv_a = std::fs::read(out.join("kmc_diffusivity.csv")).unwrap();
    let json_a = std::fs::read(out.join("kmc_diffusivity.json")).unwrap();
    assert_exit(&run(&args), 0);
    let csv_b = std::fs::read(out.join("kmc_diffusivity.csv")).unwrap();
    let json_b = std::fs::read(out.join("kmc_diffusivity.json")).unwrap();
    assert_eq!(csv_a, csv_b, "CSV must be byte-identical for a fixed seed");
    assert_eq!(json_a, json_b, "JSON must be byte-identical for a fixed seed");

    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# corrkit"));
    assert!(lines.next().unwrap().starts_with("# config:"));
    assert_eq!(
        lines.next().unwrap(),
        "T_K,D_cm2_per_s,stderr_cm2_per_s,n_s,mean_dt_over_inv_nu0"
    );
    assert_eq!(lines.count(), 2, "one row per temperature");
}

#[test]
fn missing_geometry_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "[qre]\ngeometry = \"/nonexistent/model.xyz\"\ncutoffs_ry = [10.0]\n",
    )
    .unwrap();
    let output = run(&["qre", "first", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("no such file"), "stderr: {stderr}");
}

#[test]
fn config_without_task_section_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(&config, "[output]\ndir = \"out\"\n").unwrap();
    let output = run(&["qre", "first", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 2);
}

#[test]
fn malformed_training_csv_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let training = tmp.path().join("train.csv");
    std::fs::write(&training, "energy_ev,s0,s1\n1.0,0,1\nnot_a_number,1,0\n").unwrap();
    let orbits = tmp.path().join("orbits.json");
    std::fs::write(
        &orbits,
        serde_json::to_string(&[ring_point_orbit(2, 1, BasisChoice::OneHot).unwrap()]).unwrap(),
    )
    .unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[ce]\ntraining = \"{}\"\norbits = \"{}\"\n",
            training.display(),
            orbits.display()
        ),
    )
    .unwrap();
    let output = run(&["ce", "fit", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 2);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("not_a_number"), "stderr: {stderr}");
}

#[test]
fn ce_fit_recovers_noiseless_data_and_passes_the_bar() {
    let n_sites = 10;
    let orbits = vec![
        ring_point_orbit(n_sites, 1, BasisChoice::OneHot).unwrap(),
        ring_pair_orbit(n_sites, 1, [1, 1], BasisChoice::OneHot).unwrap(),
    ];
    let truth = [0.4, -0.15, 0.08];

    // training rows straight from the forward model
    let mut csv = String::from("energy_ev,s0,s1,s2,s3,s4,s5,s6,s7,s8,s9\n");
    for pattern in 0u32..40 {
        let sigma: Vec<u32> = (0..n_sites).map(|s| (pattern >> (s % 6)) & 1).collect();
        let config = Configuration { sigma: sigma.clone(), lattice_id: "train".to_string() };
        let pi = correlation_vector(&config, &orbits).unwrap();
        let energy = truth[0]
            + truth[1] * pi[1] * orbits[0].multiplicity as f64
            + truth[2] * pi[2] * orbits[1].multiplicity as f64;
        let row: Vec<String> = sigma.iter().map(|s| s.to_string()).collect();
        csv.push_str(&format!("{energy},{}\n", row.join(",")));
    }

    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let training = tmp.path().join("train.csv");
    std::fs::write(&training, csv).unwrap();
    let orbits_path = tmp.path().join("orbits.json");
    std::fs::write(&orbits_path, serde_json::to_string(&orbits).unwrap()).unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[output]\ndir = \"{}\"\n\n[ce]\ntraining = \"{}\"\norbits = \"{}\"\n",
            out.display(),
            training.display(),
            orbits_path.display()
        ),
    )
    .unwrap();

    let output = run(&["ce", "fit", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 0);

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("ce_fit.json")).unwrap()).unwrap();
    let cv = doc["fit"]["cv_mev_per_atom"].as_f64().unwrap();
    assert!(cv < 1e-6, "noiseless CV should vanish, got {cv}");
    assert_eq!(doc["fit"]["passes_threshold"], true);

    // the bare model document round-trips and reproduces the truth
    let model: ClusterExpansionModel =
        serde_json::from_str(&std::fs::read_to_string(out.join("ce_model.json")).unwrap())
            .unwrap();
    for (j_fit, j_true) in model.j.iter().zip(&truth) {
        assert!((j_fit - j_true).abs() < 1e-8, "{j_fit} vs {j_true}");
    }
}

#[test]
fn ce_barriers_match_the_model_difference() {
    use corrkit::kmc::KmcLattice;

    let lattice = KmcLattice::new(6.24, [1, 1, 1]).unwrap();
    let n_sites = lattice.n_sites();
    let adjacency = lattice.adjacency();
    let orbits = vec![ring_point_orbit(n_sites, 1, BasisChoice::OneHot).unwrap()];

    let oct = ClusterExpansionModel {
        orbits: orbits.clone(),
        j: vec![0.2, 0.05],
        regularizer: corrkit::cluster_expansion::Regularizer::None,
        cv_score: None,
    };
    let tet = ClusterExpansionModel {
        orbits: orbits.clone(),
        j: vec![0.9, -0.1],
        regularizer: corrkit::cluster_expansion::Regularizer::None,
        cv_score: None,
    };

    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let oct_path = tmp.path().join("oct.json");
    let tet_path = tmp.path().join("tet.json");
    std::fs::write(&oct_path, serde_json::to_string(&oct).unwrap()).unwrap();
    std::fs::write(&tet_path, serde_json::to_string(&tet).unwrap()).unwrap();

    let sigma: Vec<u32> = (0..n_sites as u32).map(|s| s % 2).collect();
    let header: Vec<String> = (0..n_sites).map(|s| format!("s{s}")).collect();
    let row: Vec<String> = sigma.iter().map(|s| s.to_string()).collect();
    let configs_path = tmp.path().join("configs.csv");
    std::fs::write(&configs_path, format!("{}\n{}\n", header.join(","), row.join(","))).unwrap();

    let hop_to = adjacency[0][0];
    // also reuse the training: none needed for barriers, but [ce] requires
    // the section fields, so point them at valid files
    let training = tmp.path().join("train.csv");
    std::fs::write(&training, "energy_ev,s0\n0.0,1\n").unwrap();
    let orbits_path = tmp.path().join("orbits.json");
    std::fs::write(&orbits_path, serde_json::to_string(&orbits).unwrap()).unwrap();

    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[output]\ndir = \"{out}\"\n\n[ce]\ntraining = \"{train}\"\norbits = \"{orb}\"\n\n\
             [ce.barriers]\noct_model = \"{oct}\"\ntet_model = \"{tet}\"\nconfigs = \"{cfgs}\"\n\
             a_bohr = 6.24\ndims = [1, 1, 1]\nhops = [[0, {hop_to}]]\n",
            out = out.display(),
            train = training.display(),
            orb = orbits_path.display(),
            oct = oct_path.display(),
            tet = tet_path.display(),
            cfgs = configs_path.display(),
        ),
    )
    .unwrap();

    let output = run(&["ce", "barriers", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 0);

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("ce_barriers.json")).unwrap())
            .unwrap();
    let got = doc["barriers"][0]["barrier_ev"].as_f64().unwrap();
    let config_obj = Configuration { sigma, lattice_id: "configs".to_string() };
    let want = tet.predict(&config_obj).unwrap() - oct.predict(&config_obj).unwrap();
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");

    // a non-adjacent hop is a config error
    let bad = tmp.path().join("bad.toml");
    let bad_to = (0..n_sites).find(|s| !adjacency[0].contains(s) && *s != 0).unwrap();
    std::fs::write(
        &bad,
        std::fs::read_to_string(&config)
            .unwrap()
            .replace(&format!("hops = [[0, {hop_to}]]"), &format!("hops = [[0, {bad_to}]]")),
    )
    .unwrap();
    let output = run(&["ce", "barriers", "--config", bad.to_str().unwrap()]);
    assert_exit(&output, 2);
}

#[test]
fn extrapolation_predicts_from_low_cutoffs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[output]\ndir = \"{}\"\n\n[qre]\ngeometry = \"{}\"\ncutoffs_ry = [5.0]\n\n\
             [qre.extrapolation]\nfit_cutoffs_ry = [4.0, 5.0, 6.0, 7.0]\npredict_cutoffs_ry = [9.0]\n",
            out.display(),
            data_dir().join("mg_dimer.xyz").display()
        ),
    )
    .unwrap();
    let output = run(&["qre", "extrapolate", "--config", config.to_str().unwrap()]);
    assert_exit(&output, 0);
    let doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("qre_extrapolation.json")).unwrap(),
    )
    .unwrap();
    let pred = &doc["extrapolation"]["predictions"][0];
    assert!(pred["lambda_ha"].as_f64().unwrap() > 0.0);
    assert!(pred["t_count"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["extrapolation"]["points"].as_array().unwrap().len(), 4);
}

#[test]
fn format_flag_restricts_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[output]\ndir = \"{}\"\n\n[qre]\ngeometry = \"{}\"\ncutoffs_ry = [5.0]\nframework = \"first\"\n",
            out.display(),
            data_dir().join("mg_dimer.xyz").display()
        ),
    )
    .unwrap();
    let output = run(&[
        "qre",
        "first",
        "--config",
        config.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_exit(&output, 0);
    assert!(out.join("qre_first.json").is_file());
    assert!(!out.join("qre_first.csv").exists(), "csv suppressed by --format json");
}

#[test]
fn scaling_matches_the_binomial_frontier() {
    let output = run(&[
        "workflow",
        "scaling",
        "--method",
        "fci",
        "--n-orbitals",
        "23",
        "--eta",
        "26",
    ]);
    assert_exit(&output, 0);
    let doc = parse_stdout_json(&output);
    assert_eq!(doc["result"]["cost"], "1144066");
}

#[test]
fn solution_energy_accepts_negative_totals() {
    let output = run(&[
        "workflow",
        "solution-energy",
        "--e-defected",
        "-100.5",
        "--e-host",
        "-90.25",
        "--e-dimer",
        "-20.0",
    ]);
    assert_exit(&output, 0);
    let doc = parse_stdout_json(&output);
    let e = doc["result"]["solution_energy_ha"].as_f64().unwrap();
    assert!((e - (-100.5 - (-90.25) - 0.5 * (-20.0))).abs() < 1e-12);
}

#[test]
fn geom_inspect_counts_electrons_both_ways() {
    let geometry = data_dir().join("mg_dimer.xyz");
    let output = run(&["geom", "inspect", "--geometry", geometry.to_str().unwrap()]);
    assert_exit(&output, 0);
    let doc = parse_stdout_json(&output);
    assert_eq!(doc["result"]["eta_valence"], 144);
    assert_eq!(doc["result"]["eta_all_electron"], 788);
    assert_eq!(doc["result"]["n_atoms"], 70);
}
