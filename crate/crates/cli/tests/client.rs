// SPDX-License-Identifier: Apache-2.0

mod common;

use std::process::Command;

use serde_json::{json, Value};

use arbohub::commands::{self, Destination};
use arbohub::rows::{read_rows, upload_document};
use arbohub::score::{score_offline, OfflineOptions};
use arbohub::CliError;
use arbohub_core::datastore::{DatasetKind, DatasetQuery};
use arbohub_testkit::fixtures::{
    climate_csv, episcanner_csv, ovitrap_csv, prediction_json, synthetic_infodengue, COMMIT,
};
use common::{model_doc, mg_observed, mg_truth, perfect_state_rows, rows_csv, start, Tripwire};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_arbohub"));
    c.env_remove("ARBOHUB_API_URL")
        .env_remove("ARBOHUB_API_KEY")
        .env_remove("ARBOHUB_CONFIG")
        .env("XDG_CONFIG_HOME", "/nonexistent");
    c
}

#[tokio::test(flavor = "multi_thread")]
async fn fetch_follows_every_page_in_order() {
    let hub = start().await;
    hub.ingest(DatasetKind::Infodengue, &synthetic_infodengue(250, true));
    let dir = tempfile::tempdir().unwrap();

    let csv_path = dir.path().join("dengue.csv");
    let filters = vec![("disease".to_string(), "dengue".to_string())];
    let n = commands::fetch(&hub.client(None), DatasetKind::Infodengue, &filters, Some(7), Destination::File(&csv_path))
        .await
        .unwrap();
    assert_eq!(n, 125);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), 126);

    let json_path = dir.path().join("all.json");
    let n = commands::fetch(&hub.client(None), DatasetKind::Infodengue, &[], Some(9), Destination::File(&json_path))
        .await
        .unwrap();
    assert_eq!(n, 250);
    let fetched: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let query = DatasetQuery::from_pairs(
        DatasetKind::Infodengue,
        &[("per_page", "300")],
        hub.hub.datastore.limits(),
    )
    .unwrap();
    let direct = serde_json::to_value(hub.hub.datastore.query(DatasetKind::Infodengue, &query)).unwrap();
    assert_eq!(Value::Array(fetched), direct["items"]);
}

#[tokio::test(flavor = "multi_thread")]
async fn fetched_csv_reingests_to_the_same_records() {
    let hub = start().await;
    hub.ingest(DatasetKind::Infodengue, &synthetic_infodengue(40, true));
    hub.ingest(DatasetKind::Climate, &climate_csv((2024, 2, 1), 30, 3106200));
    hub.ingest(DatasetKind::Episcanner, &episcanner_csv());
    hub.ingest(DatasetKind::Ovitrap, &ovitrap_csv());
    let dir = tempfile::tempdir().unwrap();
    for kind in DatasetKind::ALL {
        let path = dir.path().join(format!("{kind}.csv"));
        commands::fetch(&hub.client(None), kind, &[], None, Destination::File(&path))
            .await
            .unwrap();
        let copy = arbohub_core::Datastore::in_memory();
        let report = copy
            .ingest(kind, std::fs::File::open(&path).unwrap(), &Default::default())
            .unwrap();
        assert_eq!(report.rejected, 0, "{kind}: {:?}", report.rejections);
        let all = DatasetQuery::from_pairs(kind, &[("per_page", "300")], copy.limits()).unwrap();
        assert_eq!(
            serde_json::to_value(copy.query(kind, &all)).unwrap(),
            serde_json::to_value(hub.hub.datastore.query(kind, &all)).unwrap(),
            "{kind}"
        );
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn empty_fetch_writes_header_only() {
    let hub = start().await;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("none.csv");
    let n = commands::fetch(&hub.client(None), DatasetKind::Climate, &[], None, Destination::File(&path))
        .await
        .unwrap();
    assert_eq!(n, 0);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().collect::<Vec<_>>(), [arbohub_testkit::fixtures::CLIMATE_HEADER]);
}

#[tokio::test(flavor = "multi_thread")]
async fn bad_filter_echoes_server_details() {
    let hub = start().await;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let err = commands::fetch(
        &hub.client(None),
        DatasetKind::Infodengue,
        &[("start".into(), "2024-13-01".into()), ("colour".into(), "red".into())],
        None,
        Destination::File(&path),
    )
    .await
    .unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let CliError::Server { status: 422, ref body } = err else {
        panic!("{err:?}")
    };
    assert_eq!(body.details.len(), 2);
    assert!(!path.exists(), "partial output left behind");

    let out = bin()
        .args(["fetch", "infodengue", "--start", "2024-13-01", "--api-url", &hub.url()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row  field"), "{stderr}");
    assert!(stderr.contains("start"), "{stderr}");
}

#[tokio::test(flavor = "multi_thread")]
async fn unreachable_server_is_exit_2() {
    let closed = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap()
    };
    let out = bin()
        .args(["fetch", "climate", "--retries", "1", "--api-url", &format!("http://{closed}")])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[tokio::test(flavor = "multi_thread")]
async fn register_model_from_file_and_flags() {
    let hub = start().await;
    let dir = tempfile::tempdir().unwrap();
    let meta = dir.path().join("meta.json");
    std::fs::write(&meta, model_doc(1).to_string()).unwrap();

    let out = bin()
        .args(["register-model", "--file"])
        .arg(&meta)
        .args(["--name", "Renamed", "--api-url", &hub.url()])
        .env("ARBOHUB_API_KEY", &hub.token)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let id: u64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert_eq!(hub.hub.registry.model(id).unwrap().meta.name, "Renamed");

    let out = bin()
        .args(["register-model", "--file"])
        .arg(&meta)
        .args(["--api-url", &hub.url()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("API key"));
}

#[tokio::test(flavor = "multi_thread")]
async fn invalid_model_is_rendered_as_table_without_request() {
    let wire = Tripwire::new();
    let out = bin()
        .args(["register-model", "--name", "x", "--disease", "malaria", "--adm-level", "1"])
        .args(["--api-url", &wire.url(), "--api-key", "k"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("row  field"), "{stderr}");
    assert!(stderr.contains("disease"), "{stderr}");
    assert!(stderr.contains("repository"), "{stderr}");
    assert!(!wire.was_contacted());
}

#[tokio::test(flavor = "multi_thread")]
async fn server_rejection_renders_details() {
    let hub = start().await;
    let mut doc = model_doc(1);
    doc["repository"] = json!("https://github.com/example/model");
    let client = hub.client(Some("0123456789ab.00"));
    let err = commands::register_model(&client, &doc).await.unwrap_err();
    assert!(matches!(err, CliError::Server { status: 401, .. }));
    assert_eq!(err.exit_code(), 3);
    assert!(err.render().contains("hint:"));
}

#[tokio::test(flavor = "multi_thread")]
async fn upload_weekly_state_csv() {
    let hub = start().await;
    let model = commands::register_model(&hub.authed(), &model_doc(1)).await.unwrap();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("rows.csv");
    std::fs::write(&data, rows_csv(&perfect_state_rows(), "MG")).unwrap();

    let out = bin()
        .args(["upload-prediction", "--model", &model.id.to_string(), "--commit", COMMIT])
        .args(["--predict-date", "2024-01-01", "--description", "weekly MG", "--data"])
        .arg(&data)
        .args(["--api-url", &hub.url(), "--api-key", &hub.token])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let id: u64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    let stored = hub.hub.registry.prediction(id).unwrap();
    assert_eq!(stored.prediction.rows.len(), 8);
    assert_eq!(stored.prediction.description, "weekly MG");
}

#[tokio::test(flavor = "multi_thread")]
async fn local_failures_send_nothing() {
    let wire = Tripwire::new();
    let dir = tempfile::tempdir().unwrap();
    let no_upper = dir.path().join("no_upper.csv");
    std::fs::write(&no_upper, "date,pred,lower,adm_1\n2024-01-07,10,8,MG\n").unwrap();
    let good = dir.path().join("good.csv");
    std::fs::write(&good, rows_csv(&perfect_state_rows(), "MG")).unwrap();

    let run = |data: &std::path::Path, commit: &str| {
        bin()
            .args(["upload-prediction", "--model", "1", "--commit", commit])
            .args(["--predict-date", "2024-01-01", "--data"])
            .arg(data)
            .args(["--api-url", &wire.url(), "--api-key", "k"])
            .output()
            .unwrap()
    };
    let out = run(&no_upper, COMMIT);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("upper"));

    let out = run(&good, &COMMIT[..39]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("commit"));

    assert!(!wire.was_contacted());
}

#[tokio::test(flavor = "multi_thread")]
async fn model_level_mismatch_is_caught_before_posting() {
    let hub = start().await;
    let municipal = commands::register_model(&hub.authed(), &model_doc(2)).await.unwrap();
    let rows = arbohub::rows::rows_from_csv(&rows_csv(&perfect_state_rows(), "MG")).unwrap();
    let doc = upload_document(municipal.id, COMMIT, "2024-01-01", None, rows.rows);
    let err = commands::upload_prediction(&hub.authed(), &doc).await.unwrap_err();
    let CliError::Validation(v) = err else { panic!("{err:?}") };
    assert!(v.mentions("adm_2"));
    assert!(hub.hub.registry.predictions(&Default::default()).is_empty());
}

#[test]
fn offline_score_examples() {
    let dir = tempfile::tempdir().unwrap();
    let observed = dir.path().join("observed.csv");
    std::fs::write(&observed, mg_observed(mg_truth)).unwrap();
    let perfect = dir.path().join("perfect.csv");
    std::fs::write(&perfect, rows_csv(&perfect_state_rows(), "MG")).unwrap();

    let rows = read_rows(&perfect).unwrap();
    let scored = score_offline(&rows, std::fs::File::open(&observed).unwrap(), &OfflineOptions::default()).unwrap();
    let s = scored.report.scores;
    assert_eq!(s.mae, Some(0.0));
    assert_eq!(s.mse, Some(0.0));
    assert!((s.crps.unwrap() - 0.2336949).abs() < 1e-6);

    let out = bin()
        .args(["score", "--metric", "crps", "--prediction"])
        .arg(&perfect)
        .arg("--observed")
        .arg(&observed)
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["scores"].as_object().unwrap().len(), 1);

    let later = dir.path().join("later.csv");
    std::fs::write(&later, rows_csv(&[("2030-01-06".into(), 1.0, 0.0, 2.0)], "MG")).unwrap();
    let out = bin()
        .args(["score", "--prediction"])
        .arg(&later)
        .arg("--observed")
        .arg(&observed)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no prediction row"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[tokio::test(flavor = "multi_thread")]
async fn offline_score_matches_server() {
    let hub = start().await;
    let observed = mg_observed(|w, t| ((w * 37 + t * 11) % 23) as u64);
    hub.ingest(DatasetKind::Infodengue, &observed);
    let model = commands::register_model(&hub.authed(), &model_doc(1)).await.unwrap();

    let noisy: Vec<(String, f64, f64, f64)> = perfect_state_rows()
        .into_iter()
        .enumerate()
        .map(|(i, (d, _, _, _))| {
            let p = 20.0 + (i as f64 * 1.7).sin() * 9.0;
            (d, p, p - 3.0 - i as f64, p + 5.5)
        })
        .collect();
    let doc: Value = serde_json::from_str(&prediction_json(model.id, COMMIT, "2024-01-01", &noisy, "MG")).unwrap();
    let created = commands::upload_prediction(&hub.authed(), &doc).await.unwrap();

    let stored = hub
        .client(None)
        .get_json(&format!("api/registry/predictions/{}", created.id), &[])
        .await
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let stored_path = dir.path().join("stored.json");
    std::fs::write(&stored_path, stored.to_string()).unwrap();

    for (q, metric) in [("", None), ("?metric=log_score", Some(arbohub_core::Metric::LogScore))] {
        let online: arbohub_core::ScoreReport = serde_json::from_value(
            hub.client(None)
                .get_json(&format!("api/registry/predictions/{}/score{q}", created.id), &[])
                .await
                .unwrap(),
        )
        .unwrap();
        let rows = read_rows(&stored_path).unwrap();
        let opts = OfflineOptions {
            metric,
            ..OfflineOptions::default()
        };
        let offline = score_offline(&rows, observed.as_bytes(), &opts).unwrap().report;
        assert_eq!(offline.prediction_id, online.prediction_id);
        assert_eq!(offline.n_matched, online.n_matched);
        for m in arbohub_core::Metric::ALL {
            match (offline.scores.get(m), online.scores.get(m)) {
                (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-9, "{m:?}: {a} vs {b}"),
                (a, b) => assert_eq!(a, b, "{m:?}"),
            }
        }
    }
}

#[test]
fn flags_override_environment() {
    let wire = Tripwire::new();
    let out = bin()
        .args(["fetch", "climate", "--retries", "0", "--timeout", "1", "--api-url", &wire.url()])
        .env("ARBOHUB_API_URL", "http://127.0.0.1:9")
        .output()
        .unwrap();
    assert!(wire.was_contacted());
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let wire2 = Tripwire::new();
    std::fs::write(&cfg, "api_url = \"http://127.0.0.1:9\"\ntimeout_secs = 1\nretries = 0\n").unwrap();
    let out = bin()
        .args(["fetch", "climate", "--config"])
        .arg(&cfg)
        .env("ARBOHUB_API_URL", wire2.url())
        .output()
        .unwrap();
    assert!(wire2.was_contacted(), "environment should beat the config file");
    assert_eq!(out.status.code(), Some(2));
}
