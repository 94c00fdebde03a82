use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;
use std::time::Duration;

use slidescore_core::api::Pipeline;
use slidescore_gateway::fake::FakeFactory;
use slidescore_service::{start, RunningServer, ServiceConfig};

fn slidescore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slidescore"))
        .args(args)
        .env_remove("SLIDESCORE_SERVER")
        .output()
        .expect("binary runs")
}

async fn fake_server() -> RunningServer {
    let cfg = ServiceConfig { addr: "127.0.0.1:0".parse().unwrap(), ..Default::default() };
    start(cfg, Arc::new(FakeFactory::new(Duration::from_millis(5)))).await.unwrap()
}

async fn run_async(args: Vec<String>) -> Output {
    tokio::task::spawn_blocking(move || {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        slidescore(&refs)
    })
    .await
    .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(slidescore(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(slidescore(&["score"]).status.code(), Some(1));
    assert_eq!(slidescore(&["simulate-collapse", "--k", "four"]).status.code(), Some(1));
    let help = slidescore(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("simulate-collapse"));
}

#[test]
fn simulate_collapse_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let scatter = dir.path().join("scatter.jsonl");
    let o = slidescore(&[
        "simulate-collapse",
        "--trials", "2000",
        "--sigma-sweep", "1,10",
        "--seed", "3",
        "--out", out.to_str().unwrap(),
        "--scatter", scatter.to_str().unwrap(),
        "--scatter-trials", "5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "sigma_ratio,mean_corr,stderr,trials");
    assert_eq!(lines.len(), 3);
    let corr = |l: &str| l.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(corr(lines[2]) > corr(lines[1]));
    assert!(!std::fs::read_to_string(&scatter).unwrap().is_empty());
}

#[test]
fn metaeval_prints_table_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let labels = write(
        dir.path(),
        "labels.jsonl",
        concat!(
            r#"{"sample_id":"a","defect_labels":{"whitespace":"defect"}}"#, "\n",
            r#"{"sample_id":"b","defect_labels":{"whitespace":"ok"}}"#, "\n",
            r#"{"sample_id":"c","defect_labels":{"whitespace":"defect"}}"#, "\n",
        ),
    );
    let preds = write(
        dir.path(),
        "preds.jsonl",
        concat!(
            r#"{"sample_id":"a","scores":{"whitespace":0.9}}"#, "\n",
            r#"{"request_id":"b","metric_report":{"whitespace_ratio":0.1}}"#, "\n",
            r#"{"sample_id":"c","scores":{"whitespace":0.7}}"#, "\n",
        ),
    );
    let out = dir.path().join("result.json");
    let o = slidescore(&["metaeval", "--labels", &labels, "--preds", &preds, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.lines().any(|l| l.starts_with("whitespace") && l.contains("1.000")), "{table}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(json["dimensions"]["whitespace"]["roc_auc"], 1.0);

    let missing = slidescore(&["metaeval", "--labels", &labels, "--preds", "/nonexistent/preds.jsonl"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn load_batch_reads_directories_and_ndjson() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "b.html", "<p>b</p>");
    write(dir.path(), "a.HTML", "<p>a</p>");
    write(dir.path(), "notes.txt", "ignored");
    let reqs = slidescore_cli::load_batch(dir.path(), Pipeline::Aspect, None).unwrap();
    let ids: Vec<&str> = reqs.iter().map(|r| r.request_id.as_str()).collect();
    assert_eq!(ids, ["a", "b"]);
    assert!(reqs.iter().all(|r| r.pipeline == Pipeline::Aspect));

    let shaping = slidescore_core::reward::ShapingConfig::as_printed();
    let nd = write(
        dir.path(),
        "reqs.ndjson",
        "{\"request_id\":\"x\",\"html\":\"<p>x</p>\"}\n\n{\"html\":\"<p>y</p>\",\"pipeline\":\"geometry\"}\n",
    );
    let reqs = slidescore_cli::load_batch(Path::new(&nd), Pipeline::Full, Some(shaping.clone())).unwrap();
    assert_eq!(reqs.len(), 2);
    assert_eq!(reqs[0].request_id, "x");
    assert!(reqs[1].request_id.is_empty());
    assert_eq!(reqs[1].pipeline, Pipeline::Geometry);
    assert!(reqs.iter().all(|r| r.shaping.as_ref() == Some(&shaping)));

    let empty = tempfile::tempdir().unwrap();
    assert!(slidescore_cli::load_batch(empty.path(), Pipeline::Full, None).is_err());
    let bad = write(dir.path(), "bad.ndjson", "{not json}\n");
    assert!(slidescore_cli::load_batch(Path::new(&bad), Pipeline::Full, None).is_err());
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn score_and_batch_against_a_running_server() {
    let server = fake_server().await;
    let url = server.url();
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.html", "<p>hello</p>");
    let crash = write(dir.path(), "crash.html", r#"<p data-fake="crash"></p>"#);
    let overlay = dir.path().join("ok.png");

    let o = run_async(vec!["score".into(), ok.clone(), "--server".into(), url.clone(), "--overlay".into(), overlay.to_string_lossy().into()]).await;
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("ok\n") && text.contains("whitespace_ratio"), "{text}");
    assert!(std::fs::read(&overlay).unwrap().starts_with(b"\x89PNG"));

    let o = run_async(vec!["score".into(), ok, "--server".into(), url.clone(), "--json".into(), "--pipeline".into(), "aspect".into()]).await;
    assert_eq!(o.status.code(), Some(0));
    let resp: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(resp["metric_report"]["aspect_ratio"].is_number());
    assert!(resp["metric_report"]["whitespace_ratio"].is_null());

    let o = run_async(vec!["score".into(), crash, "--server".into(), url.clone()]).await;
    assert_eq!(o.status.code(), Some(2));

    let out = dir.path().join("results.jsonl");
    let o = run_async(vec!["batch".into(), dir.path().to_string_lossy().into(), "--out".into(), out.to_string_lossy().into(), "--server".into(), url.clone()]).await;
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<serde_json::Value> =
        std::fs::read_to_string(&out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let mut ids: Vec<&str> = lines.iter().map(|l| l["request_id"].as_str().unwrap()).collect();
    ids.sort();
    assert_eq!(ids, ["crash", "ok"]);

    server.stop().await.unwrap();
    let o = run_async(vec!["score".into(), out.to_string_lossy().into(), "--server".into(), url]).await;
    assert_eq!(o.status.code(), Some(1));
}
