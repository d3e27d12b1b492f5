use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_lepage");

fn run_config(dir: &Path, name: &str, text: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{name}.toml"));
    fs::write(&cfg, text).unwrap();
    let out = dir.join(format!("out-{name}"));
    Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn example1_conditions_exit_zero_without_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "c",
        "command = \"check-conditions\"\nalpha = 1.5\nepsilon = \"rademacher\"\ny = \"example1\"\nreplicates = 2000\n\
         [envelope]\nc1 = { function = { kind = \"identity\" }, beta = 1.0 }\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out-c/conditions.csv")).unwrap();
    assert!(!csv.contains("violated"));
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn engineered_violation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "v",
        "command = \"check-conditions\"\nalpha = 1.5\nepsilon = \"rademacher\"\nreplicates = 100\n\
         pairs = [[0.4, 0.6]]\ntriples = [[0.2, 0.4, 0.6]]\n\
         y = { kind = \"fixed\", path = { dimension = 1, initial_value = [0.0], jump_times = [0.5], post_jump_values = [[10.0]] } }\n\
         [envelope]\nc1 = { function = { kind = \"identity\" }, beta = 1.0 }\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let manifest = fs::read_to_string(dir.path().join("out-v/manifest.json")).unwrap();
    assert!(manifest.contains("\"verdict\": \"violated\""));
}

#[test]
fn simulate_zero_replicates() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "s",
        "command = \"simulate\"\nalpha = 1.5\nepsilon = \"rademacher\"\ny = \"example1\"\nreplicates = 0\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let norms = fs::read_to_string(dir.path().join("out-s/norms.csv")).unwrap();
    assert_eq!(norms, "replicate,sup_norm,jumps,seed,run_id\n");
    assert!(dir.path().join("out-s/manifest.json").exists());
}

#[test]
fn invalid_configs_exit_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "a",
        "command = \"simulate\"\nalpha = 2.0\nepsilon = \"rademacher\"\ny = \"example1\"\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("line 2") && stderr(&o).contains("α ∈ (0,2)"),
        "{}",
        stderr(&o)
    );

    let o = run_config(
        dir.path(),
        "m",
        "command = \"simulate\"\nalpha = 1.5\nepsilon = { family = \"two_point\", p = 0.5, x_neg = -1.0, x_pos = 4.0 }\ny = \"example1\"\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("E ε_1 = 0"), "{}", stderr(&o));

    let o = run_config(
        dir.path(),
        "u",
        "command = \"simulate\"\nalpha = 1.5\nepsilon = \"rademacher\"\ny = \"example1\"\nreplicate = 3\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replicate"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(
        &cfg,
        "command = \"simulate\"\nalpha = 1.5\nepsilon = \"rademacher\"\ny = \"example1\"\n",
    )
    .unwrap();
    let o = Command::new(BIN)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flags_override_seed_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config(
        dir.path(),
        "f",
        "command = \"simulate\"\nalpha = 1.5\nepsilon = \"rademacher\"\ny = \"example1\"\nreplicates = 2\ntruncation_n = 50\n",
        &["--seed", "42", "--format", "csv"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out-f");
    assert!(!out.join("simulate.json").exists());
    let csv = fs::read_to_string(out.join("marginals.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",42,"));
}

#[test]
fn pool_files_resolve_against_config_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.csv"), "t,value_1\n0,0\n0.5,1\n").unwrap();
    let o = run_config(
        dir.path(),
        "p",
        "command = \"spectral\"\nalpha = 1.5\nepsilon = \"rademacher\"\nreplicates = 1000\n\
         y = { kind = \"pool\", files = [\"p.csv\"] }\n",
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn outputs_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = "command = \"stability\"\nalpha = 1.5\nepsilon = \"rademacher\"\ny = \"example1\"\n\
                replicates = 600\ntruncation_n = 300\nseed = 11\n";
    let a = run_config(dir.path(), "t1", text, &["--threads", "1"]);
    let b = run_config(dir.path(), "t4", text, &["--threads", "4"]);
    assert!(a.status.success() && b.status.success());
    let (fa, fb) = (files(&dir.path().join("out-t1")), files(&dir.path().join("out-t4")));
    assert!(!fa.is_empty());
    assert_eq!(fa, fb);
}
