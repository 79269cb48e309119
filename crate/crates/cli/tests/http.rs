use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use isacfeas::shell::api::{to_json, EvaluateRequest, HeatmapRequest, SweepRequest, SweepTarget};
use isacfeas::{HeatmapMetric, ScenarioConfig, UseCaseId};
use isacfeas_cli::{load_scenario, run, server::router, Command};

fn repo(path: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(path)
}

async fn call(method: &str, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map(Body::from).unwrap_or_else(Body::empty)).unwrap();
    let resp = router().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

#[tokio::test]
async fn evaluate_matches_cli_report_byte_for_byte() {
    let path = repo("scenarios/recommended.scn");
    let mut cli = String::new();
    let cmd = Command::Report { scenario: path.clone(), use_case: "all".into(), json: Some("-".into()) };
    run(&cmd, &mut cli).unwrap();

    let body = to_json(&EvaluateRequest { scenario: load_scenario(&path).unwrap(), use_cases: vec![] });
    let (status, http) = call("POST", "/evaluate", Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(http, cli);
    assert_eq!(http.matches("\"overall\": \"pass\"").count(), 8);
}

#[tokio::test]
async fn sweep_and_heatmap_match_cli() {
    let path = repo("scenarios/use_cases/l1.scn");
    let s = load_scenario(&path).unwrap();

    let req = SweepRequest {
        scenario: s.clone(),
        param: "signal.bandwidth_ghz".into(),
        from: 0.5,
        to: 4.0,
        points: 8,
        target: SweepTarget::Peb,
        use_case: Some(UseCaseId::L1),
    };
    let (status, body) = call("POST", "/sweep", Some(to_json(&req))).await;
    assert_eq!(status, StatusCode::OK);
    let direct = isacfeas::shell::api::sweep_request(&req).unwrap();
    assert_eq!(body, to_json(&direct));

    let mut cli = String::new();
    let cmd = Command::Sweep {
        scenario: path,
        param: req.param.clone(),
        from: 0.5,
        to: 4.0,
        points: 8,
        target: isacfeas_cli::Target::Peb,
        use_case: Some(UseCaseId::L1),
    };
    run(&cmd, &mut cli).unwrap();
    assert_eq!(cli, isacfeas::shell::emit::sweep_csv(&direct));

    let req = HeatmapRequest { scenario: s, metric: HeatmapMetric::VisibleCount };
    let (status, body) = call("POST", "/heatmap", Some(to_json(&req))).await;
    assert_eq!(status, StatusCode::OK);
    let h: isacfeas::Heatmap = serde_json::from_str(&body).unwrap();
    assert_eq!(h.values.len(), h.nx * h.ny);
    assert!(h.values.iter().all(|&v| v == 4.0));
}

#[tokio::test]
async fn use_cases_and_health() {
    let (status, body) = call("GET", "/use-cases", None).await;
    assert_eq!(status, StatusCode::OK);
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 7);
    assert_eq!(call("GET", "/healthz", None).await, (StatusCode::OK, "ok\n".into()));
    assert_eq!(call("GET", "/nope", None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_requests_are_reported_as_json() {
    let mut s = ScenarioConfig::default();
    s.signal.bandwidth_hz = -1.0;
    let (status, body) = call("POST", "/evaluate", Some(to_json(&EvaluateRequest { scenario: s, use_cases: vec![] }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body.contains("bandwidth_hz"), "{body}");

    let (status, body) = call("POST", "/evaluate", Some("{not json".into())).await;
    assert!(status.is_client_error());
    assert!(body.contains("\"error\""));
}

#[tokio::test]
async fn empty_scenario_evaluates_to_all_fail() {
    let body = r#"{"scenario": {}}"#.to_string();
    let (status, body) = call("POST", "/evaluate", Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["overall"], "fail");
    assert!(v["reports"].as_array().unwrap().iter().all(|r| r["overall"] == "fail"));
}
