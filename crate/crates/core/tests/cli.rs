use std::fs;
use std::path::Path;
use std::process::Command;

fn sglbo(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sglbo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_one_file_per_run_plus_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = sglbo(&[
        "run", "--task", "vqe", "--n", "4", "--r", "4", "--optimizer", "sglbo", "--reps", "2x1",
        "--budget", "50000", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let names = csv_names(&out);
    let runs: Vec<_> = names.iter().filter(|n| n.starts_with("run_")).collect();
    assert_eq!(runs.len(), 2);
    assert!(names.contains(&"aggregate.csv".to_string()));
    let text = fs::read_to_string(out.join(runs[0])).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(
        text.lines().next().unwrap(),
        "run,t,cumulative_shots,cost,suffix_cost,s_grad_mean,s_cost,eta"
    );
    let shots: Vec<u64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(shots.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (k, jobs) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("o{k}"));
        let o = sglbo(&[
            "run", "--optimizer", "nft", "--n", "3", "--r", "1", "--reps", "2x2", "--budget",
            "30000", "--seed", "9", "--jobs", jobs, "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        outputs.push(out);
    }
    let names = csv_names(&outputs[0]);
    assert_eq!(names, csv_names(&outputs[1]));
    for n in names.iter().filter(|n| *n != "timings.csv") {
        assert_eq!(
            fs::read(outputs[0].join(n)).unwrap(),
            fs::read(outputs[1].join(n)).unwrap(),
            "{n}"
        );
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    let out = dir.path().join("o");
    fs::write(
        &cfg,
        format!(
            "task = vqc\nn = 2\nr = 1\noptimizer = adam+ass\nbudget = 5000\nreps = 1x1\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = sglbo(&["run", "--config", cfg.to_str().unwrap(), "--reps", "3x1", "--set", "lr=0.05"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_names(&out).iter().filter(|n| n.starts_with("run_")).count(), 3);
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("# task=vqc n=2 r=1 optimizer=adam+ass"));
}

#[test]
fn invalid_config_is_a_usage_error() {
    for args in [
        &["run", "--task", "qaoa"][..],
        &["run", "--optimizer", "sglbo+sa"],
        &["run", "--reps", "0x2"],
        &["run", "--set", "nonsense=1"],
        &["run", "--task", "vqe", "--target", "0,0"],
    ] {
        let o = sglbo(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert!(!sglbo(&["frobnicate"]).status.success());
}

#[test]
fn noisy_vqc_reports_noiseless_cost() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = sglbo(&[
        "run", "--task", "vqc", "--n", "2", "--r", "1", "--optimizer", "nft", "--reps", "1x1",
        "--budget", "3000", "--noise-table", "default", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("run_000_00.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    // The first row is the noiseless cost at the starting point.
    let cost = sglbo::CostFunction::vqc(sglbo::build_ansatz(2, 1).unwrap(), vec![0.0; 8]).unwrap();
    let theta0 = sglbo::bench::runner::initial_point(0, 0, 8);
    use sglbo::Objective;
    assert_eq!(rows[0][3], cost.exact_value(&theta0).unwrap());
}

#[test]
fn oracle_and_noise_check() {
    let o = sglbo(&["oracle", "--n", "2", "--r", "1", "--starts", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let ground: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("ground energy: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((ground + 10f64.sqrt()).abs() < 1e-12);

    let o = sglbo(&["oracle", "--n", "13", "--starts", "1"]);
    assert_eq!(o.status.code(), Some(1));

    let o = sglbo(&["noise-check", "--trials", "1", "--r", "1"]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("vqc cost at target"));
}

#[test]
fn plotdata_rejects_empty_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let agg = dir.path().join("aggregate.csv");
    fs::write(
        &agg,
        "# task=vqe n=4 r=4 optimizer=nft budget=1 seed=0 reference=0 reference_kind=given sites=4\n\
         shots,runs_ok,runs_failed,median_cost,mean_cost,median_suffix_cost,mean_suffix_cost,mean_log10_gap,log10_mean_gap\n",
    )
    .unwrap();
    let out = dir.path().join("plots");
    let o = sglbo(&["plotdata", agg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(!out.exists());
}
