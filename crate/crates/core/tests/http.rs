use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use mondegreen_core::serving::{http::router, Corrector};
use mondegreen_core::trainer::{write_snapshot, RewriteEntry, TableMetadata, SNAPSHOT_VERSION};
use mondegreen_core::{normalize, RewriteTable, TrainerConfig};
use serde_json::Value;
use tower::ServiceExt;

fn table(pairs: &[(&str, &str)]) -> RewriteTable {
    RewriteTable::new(
        pairs.iter().map(|(a, b)| {
            (
                normalize(a).unwrap(),
                RewriteEntry {
                    correction: normalize(b).unwrap(),
                    pair_count: 7,
                    ratio: 0.7,
                },
            )
        }),
        TableMetadata {
            version: SNAPSHOT_VERSION,
            config: TrainerConfig::default(),
            records: 10,
            built_at: 0,
        },
    )
}

async fn call(c: &Arc<Corrector>, req: Request<Body>) -> (StatusCode, Value) {
    let resp = router(c.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn reload(path: &str) -> Request<Body> {
    Request::post("/v1/reload")
        .header("content-type", "application/json")
        .body(Body::from(serde_json::json!({ "path": path }).to_string()))
        .unwrap()
}

#[tokio::test]
async fn correct_route() {
    let c = Arc::new(Corrector::new(table(&[("rocks and", "roxanne")])));
    let (s, v) = call(&c, get("/v1/correct?q=Rocks%20And")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["original"], "Rocks And");
    assert_eq!(v["normalized"], "rocks and");
    assert_eq!(v["corrected"], "roxanne");
    assert_eq!(v["triggered"], true);

    let (s, v) = call(&c, get("/v1/correct?q=gaming+chair")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["corrected"], Value::Null);
    assert_eq!(v["triggered"], false);

    for uri in ["/v1/correct?q=", "/v1/correct?q=%20%20", "/v1/correct"] {
        let (s, v) = call(&c, get(uri)).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{uri}");
        assert!(v["error"].is_string());
    }

    let (s, v) = call(&c, get("/v1/stats")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!((v["total"].as_u64(), v["triggered"].as_u64()), (Some(2), Some(1)));
    assert_eq!(v["trigger_rate_pct"], 50.0);
}

#[tokio::test]
async fn health_and_reload() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.snapshot");
    let next = table(&[("how stores", "house tours")]);
    write_snapshot(&next, &good).unwrap();
    let bad = dir.path().join("bad.snapshot");
    std::fs::write(&bad, "#version=1\nnot a valid line\n").unwrap();

    let c = Arc::new(Corrector::without_table());
    let (s, _) = call(&c, get("/healthz")).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);

    let (s, v) = call(&c, reload(good.to_str().unwrap())).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["table_version"], next.version_tag());

    let (s, v) = call(&c, get("/healthz")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["entries"], 1);

    for path in [bad.to_str().unwrap(), "/does/not/exist"] {
        let (s, v) = call(&c, reload(path)).await;
        assert_eq!(s, StatusCode::CONFLICT);
        assert!(v["error"].is_string());
    }
    // Failed reloads keep serving the previous table.
    let (_, v) = call(&c, get("/v1/correct?q=how+stores")).await;
    assert_eq!(v["corrected"], "house tours");
    assert_eq!(v["table_version"], next.version_tag());
}
