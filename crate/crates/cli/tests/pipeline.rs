use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_scholar-profile"));
    c.env_remove("NCBI_API_KEY").env_remove("SOURCE_DATE_EPOCH").env("RUST_LOG", "error");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON error in: {stderr}"));
    serde_json::from_str(line).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// ingest -> topics -> generate -> evaluate -> humaneval -> report into `out`.
fn pipeline(out: &Path) {
    let fx = fixtures();
    let corpus = out.join("corpus.jsonl");
    let stdout = ok(&[
        "ingest", "--roster", s(&fx.join("roster/roster.csv")), "--corpus", s(&corpus), "--out", s(out),
        "--replay", s(&fx.join("eutils")), "--reference-year", "2024",
    ]);
    assert_eq!(stdout, "r001\t7\nr002\t6\nr003\t5\nr004\t0\n");
    ok(&["topics", "--corpus", s(&corpus), "--out", s(&out.join("topics")), "--topics", "5", "--seed", "7", "--iterations", "200"]);
    ok(&[
        "generate", "--corpus", s(&corpus), "--out", s(&out.join("generate")), "--provider", s(&fx.join("provider/mock.json")),
        "--mesh-vocab", s(&fx.join("mesh/descriptors.xml")), "--lda-model", s(&out.join("topics/lda_model.json")),
    ]);
    ok(&[
        "evaluate", "--corpus", s(&corpus), "--out", s(&out.join("report")), "--embeddings-dir", s(&fx.join("embeddings")),
        "--conllu-dir", s(&fx.join("conllu")), "--mesh-vocab", s(&fx.join("mesh/descriptors.xml")),
    ]);
    ok(&["humaneval", "--ratings", s(&fx.join("ratings")), "--out", s(&out.join("report"))]);
    ok(&[
        "report", "--out", s(&out.join("report")), "--humaneval", s(&out.join("report/humaneval.json")),
        "--topics-dir", s(&out.join("topics")),
    ]);
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn full_pipeline_is_deterministic_and_idempotent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let ta = tree(a.path());
    let tb = tree(b.path());
    assert_eq!(ta.keys().collect::<Vec<_>>(), tb.keys().collect::<Vec<_>>());
    for (k, v) in &ta {
        assert!(v == &tb[k], "{k} differs between runs");
    }
    for f in ["corpus.jsonl", "topics/lda_model.json", "generate/profiles/r001.mesh_gen.txt", "report/report.json", "report/run_config.evaluate.json"] {
        assert!(ta.contains_key(f), "missing {f}");
    }

    // Re-running a stage over its own outputs rewrites them identically.
    pipeline(a.path());
    assert_eq!(tree(a.path()), ta);

    let corpus = String::from_utf8(ta["corpus.jsonl"].clone()).unwrap();
    assert!(corpus.contains(r#""id":"r004""#), "zero-publication researcher is still recorded");
    let report: serde_json::Value = serde_json::from_slice(&ta["report/report.json"]).unwrap();
    assert!(report["sections"]["human_evaluation"]["agreement"]["pooled"]["description"].is_string());
    assert!(report["sections"]["topic_stability"]["researchers"].as_array().unwrap().len() == 3);
}

#[test]
fn mesh_generation_matches_golden() {
    let fx = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    ok(&["ingest", "--roster", s(&fx.join("roster/roster.csv")), "--corpus", s(&corpus), "--replay", s(&fx.join("eutils")), "--reference-year", "2024"]);
    ok(&[
        "generate", "--corpus", s(&corpus), "--out", s(dir.path()), "--strategy", "mesh", "--provider", s(&fx.join("provider/mock.json")),
        "--mesh-vocab", s(&fx.join("mesh/descriptors.xml")),
    ]);
    for rid in ["r001", "r002", "r003"] {
        let got = std::fs::read_to_string(dir.path().join(format!("profiles/{rid}.mesh_gen.txt"))).unwrap();
        let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/{rid}.mesh_gen.txt"));
        if std::env::var_os("BLESS_GOLDEN").is_some() {
            std::fs::write(&golden, &got).unwrap();
        }
        assert_eq!(got, std::fs::read_to_string(&golden).unwrap(), "{rid}");
    }
    assert!(!dir.path().join("profiles/r001.abstract_gen.txt").exists());
}

fn imported_corpus(dir: &Path) -> PathBuf {
    let fx = fixtures();
    let corpus = dir.join("corpus.jsonl");
    let stdout = ok(&["import", "--roster", s(&fx.join("roster/roster.csv")), "--profiles", s(&fx.join("profiles")), "--corpus", s(&corpus)]);
    assert!(stdout.starts_with("r001\thuman,mesh_gen,abstract_gen,paraphrase\n"), "{stdout}");
    corpus
}

#[test]
fn metric_toggles_limit_report_families() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = imported_corpus(dir.path());
    let out = dir.path().join("out");
    ok(&["evaluate", "--corpus", s(&corpus), "--out", s(&out), "--metrics", "lexical,divergence"]);
    ok(&["report", "--out", s(&out)]);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let families: std::collections::BTreeSet<&str> =
        report["values"].as_array().unwrap().iter().map(|v| v["family"].as_str().unwrap()).collect();
    assert_eq!(families.into_iter().collect::<Vec<_>>(), ["divergence", "lexical"]);
    assert!(out.join("metrics_lexical.csv").exists() && out.join("metrics_divergence.csv").exists());
    assert!(!out.join("metrics_semantic.csv").exists() && !out.join("metrics_syntactic.csv").exists());
}

#[test]
fn imported_profiles_order_kl_as_expected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = imported_corpus(dir.path());
    let out = dir.path().join("out");
    ok(&["evaluate", "--corpus", s(&corpus), "--out", s(&out), "--metrics", "divergence"]);
    let mut rdr = csv::Reader::from_path(out.join("divergence.csv")).unwrap();
    let mut kl: BTreeMap<(String, String), f64> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        kl.insert((rec[0].to_string(), rec[1].to_string()), rec[2].parse().unwrap());
    }
    for rid in ["r001", "r002", "r003"] {
        let para = kl[&(rid.to_string(), "paraphrase_vs_human".to_string())];
        for machine in ["mesh_gen_vs_human", "abstract_gen_vs_human"] {
            assert!(kl[&(rid.to_string(), machine.to_string())] > para, "{rid} {machine}");
        }
    }
}

#[test]
fn humaneval_prints_agreement_table() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["humaneval", "--ratings", s(&fixtures().join("ratings")), "--out", s(dir.path())]);
    assert!(stdout.contains("mesh_gen         54  overall                42/54    77.78%"), "{stdout}");
    assert!(stdout.contains("pooled, faculty-variant"));
    assert!(stdout.contains("stratified, high band"));
    let he: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("humaneval.json")).unwrap()).unwrap();
    assert_eq!(he["variants"]["mesh_gen"]["dimensions"]["overall"]["favourable"], 42);
}

#[test]
fn empty_roster_gives_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let roster = dir.path().join("roster.csv");
    std::fs::write(&roster, "id,name,affiliation\n").unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let stdout = ok(&["ingest", "--roster", s(&roster), "--corpus", s(&corpus), "--replay", s(&fixtures().join("eutils")), "--reference-year", "2024"]);
    assert_eq!(stdout, "");
    assert_eq!(std::fs::read_to_string(&corpus).unwrap(), "");
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.jsonl");

    let out = run(&["topics", "--corpus", s(&missing), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_json(&out);
    assert_eq!(e["error"]["kind"], "config");
    assert!(e["error"]["message"].as_str().unwrap().contains("nope.jsonl"));

    let out = run(&["evaluate", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "config");

    let out = run(&["evaluate", "--corpus", s(&missing), "--out", s(dir.path()), "--metrics", "semantic"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["error"]["message"].as_str().unwrap().contains("--embeddings-dir"));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    let out = run(&["topics", "--corpus", s(&bad), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "data");

    let roster = dir.path().join("roster.csv");
    std::fs::write(&roster, "id,name,affiliation\nx1,Zed Nobody,Nowhere Institute\n").unwrap();
    let out = run(&[
        "ingest", "--roster", s(&roster), "--corpus", s(&dir.path().join("c.jsonl")), "--replay", s(&fixtures().join("eutils")),
        "--reference-year", "2024",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["error"]["kind"], "transport");
    let report = std::fs::read_to_string(dir.path().join("ingest_report.json")).unwrap();
    assert!(report.contains("no replay fixture"), "{report}");
}
