//! End-to-end tests of the `soe` binary: documented outputs, JSON schema
//! stability, and exit codes.

use std::process::{Command, Output};

use serde_json::Value;

fn soe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soe"))
        .args(args)
        .env_remove("SOE_CHECKPOINT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = soe(args);
    assert!(
        out.status.success(),
        "`soe {}` failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json_of(args: &[&str]) -> Value {
    serde_json::from_str(&stdout_of(args)).expect("valid JSON output")
}

fn exit_code(args: &[&str]) -> i32 {
    soe(args).status.code().unwrap()
}

#[test]
fn psi2_documented_examples() {
    assert_eq!(stdout_of(&["psi2", "--cyclic", "6"]).trim(), "7/12");
    assert_eq!(stdout_of(&["psi2", "--group", "e27"]).trim(), "79/729");
    assert_eq!(stdout_of(&["psi2", "--cyclic", "2"]).trim(), "3/4");
    assert_eq!(stdout_of(&["psi2", "--abelian", "3:1,1,1"]).trim(), "79/729");
}

#[test]
fn psi_and_psi1() {
    assert_eq!(stdout_of(&["psi", "--cyclic", "6"]).trim(), "21");
    assert_eq!(stdout_of(&["psi", "--cyclic", "1"]).trim(), "1");
    assert_eq!(stdout_of(&["psi1", "--cyclic", "360"]).trim(), "1/1");
    assert_eq!(stdout_of(&["psi1", "--abelian", "2:1,1"]).trim(), "7/11");
    assert_eq!(stdout_of(&["psi1", "--group", "e27"]).trim(), "79/547");
}

#[test]
fn classify_outputs() {
    assert_eq!(
        stdout_of(&["classify", "--kind", "psi1", "--ratio", "3/4"]).trim(),
        "cyclic nilpotent supersolvable solvable"
    );
    assert_eq!(
        stdout_of(&["classify", "--kind", "psi2", "--ratio", "1/2"]).trim(),
        "cyclic"
    );
    assert_eq!(
        stdout_of(&["classify", "--kind", "psi1", "--ratio", "1/10"]).trim(),
        "(none)"
    );
}

#[test]
fn descriptor_json_via_stdin_file() {
    let dir = std::env::temp_dir().join(format!("soe-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("e27.json");
    std::fs::write(&path, r#"{"spectrum": {"1":"1","3":"26"}, "size":"27"}"#).unwrap();
    assert_eq!(
        stdout_of(&["psi2", "--descriptor", path.to_str().unwrap()]).trim(),
        "79/729"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn spectrum_round_trips_through_descriptor_schema() {
    let v = json_of(&["spectrum", "--cyclic", "6", "--json"]);
    assert_eq!(v["size"], "6");
    assert_eq!(v["spectrum"]["1"], "1");
    assert_eq!(v["spectrum"]["2"], "1");
    assert_eq!(v["spectrum"]["3"], "2");
    assert_eq!(v["spectrum"]["6"], "2");
}

#[test]
fn approximate_documented_example_re_verified() {
    let v = json_of(&[
        "approximate",
        "--target",
        "355/1000",
        "--epsilon",
        "1/1000000",
        "--json",
    ]);
    // 355/1000 reduces to 71/200; all rationals are num/den strings.
    assert_eq!(v["target"], "71/200");
    assert_eq!(v["epsilon"], "1/1000000");

    // Re-verify the claim exactly, independently of the binary.
    let psi2: soe_core::ExactRatio = v["witness_psi2"].as_str().unwrap().parse().unwrap();
    let factors: Vec<(u64, u32)> = v["witness_order_factored"]
        .as_array()
        .unwrap()
        .iter()
        .map(|pair| {
            let p: u64 = pair[0].as_str().unwrap().parse().unwrap();
            let e: u32 = pair[1].as_str().unwrap().parse().unwrap();
            (p, e)
        })
        .collect();
    let witness = soe_core::GroupDescriptor::Cyclic(
        soe_core::FactoredNatural::new(factors).unwrap(),
    );
    let reevaluated = soe_core::psi_double_prime(&witness).unwrap();
    assert_eq!(reevaluated, psi2);

    let target = soe_core::ExactRatio::from_u64(355, 1000).unwrap();
    let eps = soe_core::ExactRatio::from_u64(1, 1_000_000).unwrap();
    assert!(reevaluated.abs_diff(&target) <= eps);

    // abs_error field agrees with the recomputation.
    let abs_err: soe_core::ExactRatio = v["abs_error"].as_str().unwrap().parse().unwrap();
    assert_eq!(abs_err, reevaluated.abs_diff(&target));
}

#[test]
fn approximate_json_is_deterministic() {
    let args = ["approximate", "--target", "1/2", "--epsilon", "1/1000", "--json"];
    assert_eq!(stdout_of(&args), stdout_of(&args));
}

#[test]
fn collisions_json_and_csv() {
    let v = json_of(&["collisions", "--max", "2000", "--json"]);
    assert_eq!(v["n_max"], 2000);
    assert_eq!(v["collision_count"], 0);
    assert_eq!(v["collisions"].as_array().unwrap().len(), 0);
    assert!(v["meta"]["elapsed_seconds"].is_number());

    // Determinism modulo the meta block.
    let mut a = json_of(&["collisions", "--max", "2000", "--json"]);
    let mut b = json_of(&["collisions", "--max", "2000", "--json"]);
    a.as_object_mut().unwrap().remove("meta");
    b.as_object_mut().unwrap().remove("meta");
    assert_eq!(a, b);

    // CSV header-only pair list on stdout in human mode.
    let text = stdout_of(&["collisions", "--max", "100", "--csv", "-"]);
    assert!(text.starts_with("m,n,num,den\n"), "{text}");
    assert!(text.contains("0 collision(s)"), "{text}");
}

#[test]
fn preimage_and_uniqueness_and_divergence() {
    let v = json_of(&["preimage", "--q", "7/12", "--max", "10000", "--json"]);
    assert_eq!(v["matches"].as_array().unwrap(), &[Value::String("6".into())]);

    let v = json_of(&["preimage", "--q", "79/729", "--max", "10000", "--json"]);
    assert_eq!(v["matches"].as_array().unwrap().len(), 0);

    let v = json_of(&["uniqueness-c2", "--max", "10000", "--json"]);
    assert_eq!(v["unique"], true);
    assert_eq!(v["preimages"].as_array().unwrap(), &[Value::Number(2.into())]);

    let v = json_of(&["divergence", "--k", "3", "--json"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["rows"][0]["prime"], 2);
}

#[test]
fn exclude_dyadic_trace_schema() {
    let v = json_of(&["exclude-dyadic", "--a", "1", "--r", "1", "--json"]);
    assert_eq!(v["value"], "1/2");
    assert_eq!(v["excluded"], true);
    let steps = v["steps"].as_array().unwrap();
    assert!(steps.len() >= 6);
    for step in steps {
        assert!(step["claim"].is_string());
        assert!(step["checked"].is_boolean());
        assert!(step.get("values").is_some());
    }
    // Exactly one step is taken on citation rather than checked.
    assert_eq!(steps.iter().filter(|s| s["checked"] == false).count(), 1);
}

#[test]
fn exit_codes() {
    // Domain errors → 1.
    assert_eq!(exit_code(&["psi2", "--cyclic", "0"]), 1);
    assert_eq!(exit_code(&["classify", "--kind", "psi1", "--ratio", "5/4"]), 1);
    assert_eq!(exit_code(&["preimage", "--q", "0/1", "--max", "100"]), 1);
    assert_eq!(exit_code(&["exclude-dyadic", "--a", "3", "--r", "2"]), 1);
    assert_eq!(exit_code(&["approximate", "--target", "2/1", "--epsilon", "1/10"]), 1);
    // Parse errors → 1.
    assert_eq!(exit_code(&["psi2", "--cyclic=x6"]), 1);
    assert_eq!(exit_code(&["classify", "--kind", "psi1", "--ratio", "0.75"]), 1);
    // Resource errors → 2.
    assert_eq!(exit_code(&["psi", "--cyclic", "99999999999999999999999"]), 2);
    assert_eq!(exit_code(&["spectrum", "--abelian", "2:60;3:60;5:60;7:60"]), 2);
    // Usage errors → 64.
    assert_eq!(exit_code(&["bogus"]), 64);
    assert_eq!(exit_code(&["psi2"]), 64); // no group selector
    assert_eq!(exit_code(&["psi2", "--cyclic", "2", "--group", "e27"]), 64);
    // Help and version → 0.
    assert_eq!(exit_code(&["--help"]), 0);
    assert_eq!(exit_code(&["--version"]), 0);
    assert!(stdout_of(&["--version"]).contains("schema v1"));
}

#[test]
fn thread_flag_leaves_payload_identical() {
    let mut a = json_of(&["collisions", "--max", "30000", "--json"]);
    let mut b = json_of(&["collisions", "--max", "30000", "--threads", "3", "--json"]);
    a.as_object_mut().unwrap().remove("meta");
    b.as_object_mut().unwrap().remove("meta");
    assert_eq!(a, b);
}

#[test]
fn checkpoint_dir_env_var_is_honored() {
    let dir = std::env::temp_dir().join(format!("soe-env-ckpt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_soe"))
        .args(["collisions", "--max", "5000", "--json"])
        .env("SOE_CHECKPOINT_DIR", &dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    // Checkpointing forces sort-merge and leaves a manifest behind.
    assert_eq!(v["mode"], "sort-merge");
    assert!(dir.join("manifest.txt").exists());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn witness_scale_cyclic_orders_never_expand() {
    // ψ'' of C_{2^1000 · 3^1000} straight from the factored descriptor.
    let dir = std::env::temp_dir().join(format!("soe-big-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("big.json");
    std::fs::write(&path, r#"{"cyclic": [["2","1000"],["3","1000"]]}"#).unwrap();
    let printed = stdout_of(&["psi2", "--descriptor", path.to_str().unwrap()]);
    let expected = soe_core::psi_double_prime(
        &soe_core::GroupDescriptor::Cyclic(
            soe_core::FactoredNatural::new(vec![(2, 1000), (3, 1000)]).unwrap(),
        ),
    )
    .unwrap();
    assert_eq!(printed.trim(), expected.to_string());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn budget_exhaustion_is_a_resource_error() {
    let out = soe(&[
        "approximate",
        "--target",
        "1/1000",
        "--epsilon",
        "1/1000000",
        "--prime-budget",
        "1000",
    ]);
    assert_eq!(out.status.code().unwrap(), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("budget"), "{err}");
}
