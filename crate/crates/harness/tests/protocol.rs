mod common;

use mssvdd::metrics::{compute_metrics, ConfusionCounts, MetricReport};
use mssvdd::model::fit;
use mssvdd_harness::config::ExperimentConfig;
use mssvdd_harness::protocol::{load_dataset, run_protocol, LoadedData, METHOD_SSVDD, METHOD_SVDD};
use mssvdd_harness::report::{render, ReportFormat};

fn config(dir: &std::path::Path) -> ExperimentConfig {
    let text = format!(
        r#"
[dataset]
kind = "synthetic"
[dataset.synthetic]
dims = [5, 4]
targets = 30
outliers = 20
seed = 4

[grids]
variants = ["linear", "npt"]
omegas = ["w0", "w2"]
c = [0.1, 0.3]
beta = [0.1]
sigma = [3.0]
d = [1, 2]
eta = [0.03]

[protocol]
repeats = 2
cv_k = 3
max_iter = 5
baselines = ["svdd", "s-svdd"]

[output]
dir = "{}"
"#,
        dir.display()
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

#[test]
fn rerun_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let a = run_protocol(&cfg).unwrap();
    let b = run_protocol(&cfg).unwrap();
    assert!(a.failures.is_empty());
    assert_eq!(a.rows, b.rows);
    assert_eq!(render(&a.summary, ReportFormat::Csv).unwrap(), render(&b.summary, ReportFormat::Csv).unwrap());
    assert_eq!(render(&a.summary, ReportFormat::Markdown).unwrap(), render(&b.summary, ReportFormat::Markdown).unwrap());
}

#[test]
fn rows_are_consistent_with_their_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_protocol(&config(dir.path())).unwrap();
    assert_eq!(out.monotonicity_violations, 0);
    assert!(out.batches > 0);
    for r in &out.rows {
        let c = r.counts.unwrap();
        assert_eq!(compute_metrics(&c).unwrap(), r.metrics);
        assert_eq!(r.metrics.gmean, (r.metrics.tpr * r.metrics.tnr).sqrt());
        assert!(r.refit);
    }
    // Two splits of every configuration are averaged into one summary row.
    assert_eq!(out.rows.len(), 2 * out.summary.len());
    for s in &out.summary {
        let members: Vec<MetricReport> =
            out.rows.iter().filter(|r| r.group_key() == s.group_key()).map(|r| r.metrics).collect();
        assert_eq!(MetricReport::mean(&members).unwrap(), s.metrics);
    }
}

#[test]
fn baselines_match_direct_calls() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let out = run_protocol(&cfg).unwrap();
    let LoadedData::Pool(pool) = load_dataset(&cfg).unwrap() else {
        panic!("synthetic data is a pool")
    };
    let plan = mssvdd::data::stratified_split(&pool.classes, cfg.protocol.train_fraction, cfg.protocol.split_seeds()[0]).unwrap();
    let (train, test) = (pool.subset(&plan.train_idx), pool.subset(&plan.test_idx));
    let first_split = &out.rows[0].split;

    let svdd = out.rows.iter().find(|r| r.method == METHOD_SVDD && &r.split == first_split).unwrap();
    let p = svdd.params.unwrap();
    assert_eq!((p.max_iter, p.d, svdd.variant), (0, 9, None));
    let model = mssvdd::model::fit_plain_svdd(&train, p.c, true).unwrap();
    let pred = model.predict(&test.concatenated()).unwrap();
    assert_eq!(ConfusionCounts::from_predictions(&test.labels, &pred).unwrap(), svdd.counts.unwrap());

    for m in 0..2 {
        let name = format!("{METHOD_SSVDD}/m{}", m + 1);
        for row in out.rows.iter().filter(|r| r.method == name && &r.split == first_split) {
            let p = row.params.unwrap();
            let model = fit(&train.single_modality(m), &p, true).unwrap();
            let pred = model.predict(&test.single_modality(m)).unwrap();
            assert_eq!(ConfusionCounts::from_predictions(&test.labels, &pred).unwrap(), row.counts.unwrap());
        }
    }
}

#[test]
fn csv_and_markdown_agree() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_protocol(&config(dir.path())).unwrap();
    let md = render(&out.summary, ReportFormat::Markdown).unwrap();
    let csv = render(&out.summary, ReportFormat::Csv).unwrap();
    let md_rows: Vec<Vec<String>> = md
        .lines()
        .filter(|l| l.starts_with("| ") && !l.starts_with("| method"))
        .map(|l| l.trim_matches('|').split('|').map(|c| c.trim().to_string()).collect())
        .collect();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), md_rows.len());
    for (rec, md_row) in records.iter().zip(&md_rows) {
        assert_eq!(rec[col("method")], md_row[0]);
        for (k, name) in ["accu", "tpr", "tnr", "pre", "f1", "gmean"].iter().enumerate() {
            let full: f64 = rec[col(name)].parse().unwrap();
            assert_eq!(format!("{full:.2}"), md_row[6 + k], "{name}");
        }
    }
}
