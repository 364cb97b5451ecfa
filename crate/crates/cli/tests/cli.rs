use std::path::{Path, PathBuf};

use mcrisk::cli::run;
use mcrisk::export::Table;
use mcrisk::project_file::{parse_project_str, render};
use mcrisk_core::model::{Activity, Distribution, Precedence, ProjectSpec, RiskEvent, RiskKind};
use proptest::prelude::*;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn mcrisk(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("mcrisk").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_project(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const SERIAL: &str = r#"
[[activity]]
id = "S"
duration = "point(0)"
[[activity]]
id = "A"
duration = "uniform(2, 4)"
fixed_cost = 10
variable_cost_rate = 1
[[activity]]
id = "B"
duration = "triangular(1, 2, 3)"
variable_cost_rate = 3
[[activity]]
id = "C"
duration = "normal(5, 1)"
[[activity]]
id = "E"
duration = "point(0)"
[precedence]
edges = [["A", "S"], ["B", "A"], ["C", "B"], ["E", "C"]]
"#;

const DETERMINISTIC: &str = r#"
[[activity]]
id = "S"
duration = "point(0)"
[[activity]]
id = "A"
duration = "point(3)"
variable_cost_rate = 2
[[activity]]
id = "E"
duration = "point(0)"
[precedence]
edges = [["A", "S"], ["E", "A"]]
"#;

#[test]
fn validate_eight_node() {
    let o = mcrisk(&["validate", "--project", &fixture("eight_node.project")]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("nodes: 8\n"), "{}", o.stdout);
    assert!(o.stdout.contains("paths: 3\n"), "{}", o.stdout);
    let o = mcrisk(&[
        "validate",
        "--project",
        &fixture("eight_node_risks.project"),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("risks: 3\n"));
}

#[test]
fn both_fixtures_describe_the_same_schedule() {
    let a = mcrisk(&["cpm", "--project", &fixture("eight_node.project")]);
    let b = mcrisk(&["cpm", "--project", &fixture("eight_node_risks.project")]);
    let finish = |s: &str| {
        s.lines()
            .last()
            .unwrap()
            .split(',')
            .nth(5)
            .unwrap()
            .to_string()
    };
    assert_eq!(finish(&a.stdout), finish(&b.stdout));
}

#[test]
fn project_errors_exit_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_project(dir.path(), "empty.project", "[precedence]\nedges = []\n");
    let o = mcrisk(&["validate", "--project", &empty]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("start"), "{}", o.stderr);

    let text = std::fs::read_to_string(fixture("eight_node.project")).unwrap();
    let short = write_project(
        dir.path(),
        "short.project",
        &text.replace("\"0 0 0 0 0 1 1 0\"", "\"0 0 0 0 0 1 1\""),
    );
    let o = mcrisk(&["validate", "--project", &short]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("matrix row 5 (`A4`)"), "{}", o.stderr);
    assert!(o.stderr.contains("line 62"), "{}", o.stderr);

    let unknown = write_project(
        dir.path(),
        "u.project",
        &text.replace("name = \"Design\"", "nmae = \"Design\""),
    );
    let o = mcrisk(&["validate", "--project", &unknown]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("unknown field `nmae`"), "{}", o.stderr);

    let cycle = write_project(
        dir.path(),
        "c.project",
        &SERIAL.replace("[\"A\", \"S\"]", "[\"A\", \"S\"], [\"A\", \"C\"]"),
    );
    let o = mcrisk(&["validate", "--project", &cycle]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("cycle"), "{}", o.stderr);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_project(dir.path(), "s.project", SERIAL);
    assert_eq!(mcrisk(&["validate", "--project", "/no/such/file"]).code, 2);
    assert_eq!(
        mcrisk(&["simulate", "--project", &p, "--runs", "0"]).code,
        3
    );
    assert_eq!(
        mcrisk(&["simulate", "--project", &p, "--runs", "many"]).code,
        3
    );
    assert_eq!(
        mcrisk(&[
            "contingency",
            "--project",
            &p,
            "--runs",
            "100",
            "--percentile",
            "101"
        ])
        .code,
        3
    );
    assert_eq!(
        mcrisk(&[
            "forecast",
            "--project",
            &p,
            "--runs",
            "10",
            "--observe",
            "t=1,ev=1,ac=1",
            "--neighbors",
            "11"
        ])
        .code,
        3
    );
    assert_eq!(
        mcrisk(&["plot", "--project", &p, "--runs", "10", "--kind", "triad"]).code,
        3
    );
    assert_eq!(mcrisk(&["bogus"]).code, 3);

    let o = mcrisk(&[
        "control",
        "--project",
        &p,
        "--runs",
        "200",
        "--observe",
        "t=1,ev=0,ac=0",
    ]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("earned value is zero"), "{}", o.stderr);
    let o = mcrisk(&[
        "control",
        "--project",
        &p,
        "--runs",
        "200",
        "--observe",
        "t=1,ev=1e9,ac=0",
    ]);
    assert_eq!(o.code, 1);
}

#[test]
fn sensitivity_export_has_one_row_per_activity() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_project(dir.path(), "s.project", SERIAL);
    let out = dir.path().join("out");
    let args = [
        "indices",
        "--project",
        &p,
        "--runs",
        "500",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(mcrisk(&args).code, 0);
    let first = std::fs::read(out.join("indices.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 4);
    assert_eq!(mcrisk(&args).code, 0);
    assert_eq!(std::fs::read(out.join("indices.csv")).unwrap(), first);
}

#[test]
fn percentile_table_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_project(dir.path(), "s.project", SERIAL);
    let o = mcrisk(&["simulate", "--project", &p, "--runs", "3000", "--seed", "9"]);
    assert_eq!(o.code, 0);
    let mut reader = csv::Reader::from_reader(o.stdout.as_bytes());
    assert_eq!(reader.headers().unwrap(), vec!["p", "duration", "cost"]);
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 19);
    assert_eq!(rows[0][0], 5.0);
    assert_eq!(rows[18][0], 95.0);

    let spec = parse_project_str(SERIAL).unwrap();
    let net = mcrisk_core::model::validate(&spec).unwrap();
    let ens = mcrisk_core::montecarlo::run_ensemble(
        &net,
        &mcrisk_core::montecarlo::SimConfig::new(3000, 9),
    )
    .unwrap();
    let d = mcrisk_core::montecarlo::stats::sorted(ens.total_durations());
    for row in &rows {
        let exact = mcrisk_core::montecarlo::stats::percentile_of_sorted(&d, row[0]).unwrap();
        assert!(
            ((row[1] - exact) / exact).abs() <= 5e-9,
            "{} vs {exact}",
            row[1]
        );
    }
}

#[test]
fn import_matrix_command() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    std::fs::write(&csv, "Precedentes,A0,A1,A2\nA0,0,0,0\nA1,1,,\nA2,,1,\n").unwrap();
    let out = dir.path().join("m.project");
    let o = mcrisk(&[
        "import-matrix",
        "--input",
        csv.to_str().unwrap(),
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let o = mcrisk(&["validate", "--project", out.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.contains("paths: 1\n"));
}

fn svg(args: &[&str]) -> String {
    let o = mcrisk(args);
    assert_eq!(o.code, 0, "{}", o.stderr);
    o.stdout
}

fn series(doc: &roxmltree::Document) -> Vec<(String, usize, Option<String>)> {
    doc.descendants()
        .filter(|n| n.attribute("class") == Some("series"))
        .map(|n| {
            (
                n.attribute("data-label").unwrap().to_string(),
                n.attribute("data-points").unwrap().parse().unwrap(),
                n.attribute("data-last").map(str::to_string),
            )
        })
        .collect()
}

#[test]
fn every_plot_is_valid_svg() {
    let f = fixture("eight_node_risks.project");
    let expected = [
        ("pv", 1),
        ("pdfcdf", 2),
        ("scatter", 3),
        ("ci_bars", 3),
        ("srb_crb", 2),
        ("triad", 12),
    ];
    for (kind, count) in expected {
        let text = svg(&[
            "plot",
            "--project",
            &f,
            "--runs",
            "800",
            "--kind",
            kind,
            "--observe",
            "t=5,ev=8000,ac=9000",
        ]);
        let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{kind}: {e}"));
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert_eq!(series(&doc).len(), count, "{kind}");
    }
}

#[test]
fn constant_sample_gives_one_bar_and_a_step() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_project(dir.path(), "d.project", DETERMINISTIC);
    let text = svg(&["plot", "--project", &p, "--runs", "50", "--kind", "pdfcdf"]);
    let doc = roxmltree::Document::parse(&text).unwrap();
    let s = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("series"))
        .collect::<Vec<_>>();
    assert_eq!(s.len(), 2);
    let bars: Vec<_> = s[0].children().filter(|c| c.has_tag_name("rect")).collect();
    let heights: Vec<f64> = bars
        .iter()
        .map(|b| b.attribute("height").unwrap().parse().unwrap())
        .collect();
    assert_eq!(
        heights.iter().filter(|h| **h > 0.0).count(),
        1,
        "{heights:?}"
    );
    assert_eq!(s[1].attribute("data-label"), Some("cdf"));
    assert_eq!(s[1].attribute("data-last"), Some("3,1"));
}

#[test]
fn deterministic_sevm_has_no_late_runs() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_project(dir.path(), "d.project", DETERMINISTIC);
    let text = svg(&[
        "plot",
        "--project",
        &p,
        "--runs",
        "40",
        "--kind",
        "sevm",
        "--observe",
        "t=2,ev=3,ac=3",
        "--neighbors",
        "10",
    ]);
    let doc = roxmltree::Document::parse(&text).unwrap();
    let labels: Vec<String> = series(&doc).into_iter().map(|s| s.0).collect();
    assert_eq!(labels, ["other runs", "early", "observed"]);
}

#[test]
fn srb_endpoint_matches_printed_sigma() {
    let f = fixture("eight_node_risks.project");
    let o = mcrisk(&["baseline", "--project", &f, "--runs", "2000"]);
    assert_eq!(o.code, 0);
    let sigma: f64 = o
        .stderr
        .lines()
        .find_map(|l| l.strip_prefix("sd_duration: "))
        .unwrap()
        .parse()
        .unwrap();
    let text = svg(&[
        "plot",
        "--project",
        &f,
        "--runs",
        "2000",
        "--kind",
        "srb_crb",
    ]);
    let doc = roxmltree::Document::parse(&text).unwrap();
    let srb = series(&doc).into_iter().find(|s| s.0 == "SRB").unwrap();
    let last_y: f64 = srb.2.unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(
        ((last_y - sigma) / sigma).abs() < 1e-8,
        "{last_y} vs {sigma}"
    );
}

#[test]
fn out_dir_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/run");
    let f = fixture("eight_node.project");
    let o = mcrisk(&[
        "simulate",
        "--project",
        &f,
        "--runs",
        "300",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.code, 0);
    for name in [
        "percentiles.csv",
        "runs.csv",
        "node_durations.csv",
        "duration_histogram.csv",
        "cost_histogram.csv",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 301);
    let o = mcrisk(&[
        "plot",
        "--project",
        &f,
        "--runs",
        "300",
        "--kind",
        "pv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.is_empty());
    assert!(PathBuf::from(&out).join("pv.svg").exists());
}

#[test]
fn table_quoting_survives_a_csv_reader() {
    let mut t = Table::new(&["id", "name"]);
    t.push(vec!["A".into(), "line\nbreak, \"quoted\"".into()]);
    let text = t.to_csv().unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let rec = r.records().next().unwrap().unwrap();
    assert_eq!(&rec[1], "line\nbreak, \"quoted\"");
}

fn arb_law() -> impl Strategy<Value = Distribution> {
    let pos = 0.0f64..1e4;
    prop_oneof![
        pos.clone().prop_map(Distribution::point),
        (pos.clone(), 0.0f64..50.0).prop_map(|(a, w)| Distribution::uniform(a, a + w)),
        (pos.clone(), 0.0f64..1.0, 0.0f64..50.0).prop_map(|(a, m, w)| Distribution::triangular(
            a,
            a + m * w,
            a + w
        )),
        (pos.clone(), 0.0f64..1.0, 0.0f64..50.0).prop_map(|(a, m, w)| Distribution::pert(
            a,
            a + m * w,
            a + w
        )),
        (1.0f64..100.0, 0.0f64..10.0).prop_map(|(m, s)| Distribution::normal(m, s)),
        (pos, 0.0f64..1.0).prop_map(|(v, p)| Distribution::discrete(vec![(0.0, 1.0 - p), (v, p)])),
    ]
}

fn arb_spec() -> impl Strategy<Value = ProjectSpec> {
    (
        prop::collection::vec(
            (
                "[A-Za-z][A-Za-z0-9_.-]{0,6}",
                "[ -~é\"\\\\]{0,12}",
                arb_law(),
                0.0f64..1e5,
                0.0f64..1e3,
            ),
            1..8,
        ),
        prop::collection::vec((0usize..8, 0usize..8), 0..12),
        prop::collection::vec(
            (
                "[a-z]{1,4}",
                0.0f64..=1.0,
                arb_law(),
                any::<bool>(),
                0usize..8,
            ),
            0..3,
        ),
    )
        .prop_map(|(acts, edges, risks)| {
            let mut seen = std::collections::HashSet::new();
            let activities: Vec<Activity> = acts
                .into_iter()
                .filter(|a| seen.insert(a.0.clone()))
                .map(|(id, name, law, f, v)| Activity::new(id, name, law).with_costs(f, v))
                .collect();
            let n = activities.len();
            let precedences = edges
                .into_iter()
                .map(|(a, b)| Precedence::new(&activities[a % n].id, &activities[b % n].id))
                .collect();
            let risks = risks
                .into_iter()
                .filter(|r| seen.insert(format!("risk-{}", r.0)))
                .map(|(id, p, impact, dur, t)| RiskEvent {
                    id: format!("risk-{id}"),
                    name: String::new(),
                    probability: p,
                    impact,
                    kind: if dur {
                        RiskKind::Duration
                    } else {
                        RiskKind::Cost
                    },
                    target: activities[t % n].id.clone(),
                })
                .collect();
            ProjectSpec {
                activities,
                precedences,
                risks,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parse_render_round_trip(spec in arb_spec()) {
        let text = render(&spec);
        let back = parse_project_str(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, spec);
    }
}
