//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::Request;
use common::{get, multipart, post_json, Field, TestApp, PNG};
use duet_core::diff::{diff, Category, Change, Detail, DiffReport};
use duet_core::feedback::{check_neutrality, missing_element_name, render_feedback, Audience, Lexicon, TemplateSet};
use duet_core::gateway::{GatewayConfig, MockTransport};
use duet_core::generate::random_diagram;
use duet_core::matching::{match_nodes, DEFAULT_THRESHOLD};
use duet_core::misconception::classify;
use duet_core::mutation::{mutants, mutate, Mutant, MutationOperator};
use duet_core::plantuml::Severity;
use duet_core::similarity::name_similarity;
use duet_core::{canonicalize, parse_plantuml, print_plantuml, Diagram, DiagramKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn corpus() -> Vec<(String, Diagram)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let parsed = parse_plantuml(&std::fs::read_to_string(&p).unwrap(), None)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, parsed.diagram)
        })
        .collect()
}

fn kind(i: u64) -> DiagramKind {
    if i % 2 == 0 {
        DiagramKind::ClassDiagram
    } else {
        DiagramKind::ERDiagram
    }
}

fn compare(r: &Diagram, s: &Diagram) -> DiffReport {
    let m = match_nodes(r, s, DEFAULT_THRESHOLD).unwrap();
    diff(r, s, &m).unwrap()
}

fn round_trip(corpus: &[(String, Diagram)]) -> Outcome {
    let start = Instant::now();
    let mut diagrams: Vec<Diagram> = corpus.iter().map(|(_, d)| d.clone()).collect();
    let classes = diagrams.iter().filter(|d| d.kind == DiagramKind::ClassDiagram).count();
    let ers = diagrams.len() - classes;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    diagrams.extend((0..500).map(|i| random_diagram(&mut rng, kind(i), 9)));
    let mut failures = Vec::new();
    let mut errors = 0;
    for (i, d) in diagrams.iter().enumerate() {
        let text = print_plantuml(d);
        match parse_plantuml(&text, Some(d.kind)) {
            Ok(p) => {
                errors += p.diagnostics.iter().filter(|x| x.severity == Severity::Error).count();
                if p.diagram != *d {
                    failures.push(i);
                }
            }
            Err(e) => {
                errors += e.errors().count();
                failures.push(i);
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        classes >= 10 && ers >= 10 && failures.is_empty() && errors == 0 && elapsed < Duration::from_secs(5),
        format!(
            "{} diagrams ({classes} class + {ers} ER corpus, 500 generated), {} mismatches, {errors} error diagnostics, {:.2} s",
            diagrams.len(),
            failures.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn identity(corpus: &[(String, Diagram)]) -> Outcome {
    let non_empty: Vec<&str> =
        corpus.iter().filter(|(_, d)| !compare(d, d).is_empty()).map(|(n, _)| n.as_str()).collect();
    outcome(non_empty.is_empty(), format!("{} corpus diagrams, non-empty: {non_empty:?}", corpus.len()))
}

fn corpus_mutants(corpus: &[(String, Diagram)]) -> Vec<(Diagram, Mutant)> {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    corpus.iter().flat_map(|(_, d)| mutants(d, 2, &mut rng).into_iter().map(|m| (d.clone(), m))).collect()
}

fn mutation(all: &[(Diagram, Mutant)]) -> Outcome {
    let start = Instant::now();
    let mut per_operator: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (original, m) in all {
        let report = compare(original, &m.diagram);
        let found = report.differences.iter().any(|d| {
            d.category == m.expected.category && d.change == m.expected.change && d.subject == m.expected.subject
        });
        let tagged = classify(&report).iter().any(|t| t.code == m.expected.code);
        let entry = per_operator.entry(m.operator.to_string()).or_default();
        entry.0 += 1;
        entry.1 += usize::from(found && tagged);
    }
    let elapsed = start.elapsed();
    let detected: usize = per_operator.values().map(|v| v.1).sum();
    let summary: Vec<String> = per_operator.iter().map(|(op, (n, ok))| format!("{op} {ok}/{n}")).collect();
    outcome(
        per_operator.len() == MutationOperator::ALL.len()
            && all.len() >= 80
            && detected == all.len()
            && elapsed < Duration::from_secs(10),
        format!("{detected}/{} mutants detected, {:.2} s [{}]", all.len(), elapsed.as_secs_f64(), summary.join(", ")),
    )
}

fn rename_with_typo(d: &Diagram, rng: &mut ChaCha8Rng) -> Option<Diagram> {
    let mut d = d.clone();
    let old = d.nodes.choose(rng)?.name.clone();
    let new = format!("{old}s");
    if d.node(&new).is_some() {
        return None;
    }
    for n in d.nodes.iter_mut().filter(|n| n.name == old) {
        n.name = new.clone();
    }
    for r in &mut d.relationships {
        for end in [&mut r.end_a, &mut r.end_b] {
            if *end == old {
                *end = new.clone();
            }
        }
    }
    canonicalize(&d).ok()
}

fn derived(r: &Diagram, rng: &mut ChaCha8Rng) -> Diagram {
    let mut s = r.clone();
    for _ in 0..rng.gen_range(1..6) {
        if rng.gen_bool(0.25) {
            if let Some(t) = rename_with_typo(&s, rng) {
                s = t;
            }
        } else if let Some(m) = mutate(&s, *MutationOperator::ALL.choose(rng).unwrap(), rng) {
            s = m.diagram;
        }
    }
    s
}

type Mirror = (Category, String, String, Detail, String);

fn mirrored(report: &DiffReport, change: Change, swap: bool) -> BTreeSet<Mirror> {
    report
        .differences
        .iter()
        .filter(|d| d.change == change)
        .map(|d| {
            let detail = if swap {
                Detail { expected: d.detail.found.clone(), found: d.detail.expected.clone() }
            } else {
                d.detail.clone()
            };
            (d.category, format!("{:?}", d.aspect), d.subject.clone(), detail, format!("{:?}", d.location))
        })
        .collect()
}

fn duality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pairs = 250;
    let mut broken = Vec::new();
    let mut non_trivial = 0;
    for i in 0..pairs {
        let r = random_diagram(&mut rng, kind(i), 8);
        let s = if i % 10 == 9 { random_diagram(&mut rng, r.kind, 8) } else { derived(&r, &mut rng) };
        let m = match_nodes(&r, &s, DEFAULT_THRESHOLD).unwrap();
        let forward = diff(&r, &s, &m).unwrap();
        let backward = diff(&s, &r, &m.transposed()).unwrap();
        non_trivial += usize::from(forward.differences.iter().any(|d| d.change != Change::Modified));
        if mirrored(&forward, Change::Missing, true) != mirrored(&backward, Change::Extra, false)
            || mirrored(&forward, Change::Extra, true) != mirrored(&backward, Change::Missing, false)
        {
            broken.push(i);
        }
    }
    outcome(
        broken.is_empty(),
        format!("{pairs} generated pairs ({non_trivial} with Missing/Extra items), broken: {broken:?}"),
    )
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_')).map(str::to_lowercase).collect()
}

fn neutrality(all: &[(Diagram, Mutant)]) -> Outcome {
    let lexicon = Lexicon::default();
    let templates = TemplateSet::default();
    let mut violations = 0;
    let mut leaks = Vec::new();
    let mut missing_nodes = 0;
    for (original, m) in all {
        let report = compare(original, &m.diagram);
        let bundle = render_feedback(&report, &classify(&report), &templates).unwrap();
        violations += check_neutrality(&bundle.student_markdown, &lexicon).len();
        let hints = bundle.sections_for(Audience::Student).flat_map(|s| s.hints.iter());
        for (d, hint) in report.differences.iter().zip(hints) {
            let node_level = matches!(d.category, Category::Classes | Category::Entities) && d.change == Change::Missing;
            let Some(name) = missing_element_name(d).filter(|_| node_level) else { continue };
            missing_nodes += 1;
            let lower = name.to_lowercase();
            if words(hint).contains(&lower) || hint.to_lowercase().contains(&format!("`{lower}")) {
                leaks.push(format!("{name}: {hint}"));
            }
        }
    }
    outcome(
        violations == 0 && leaks.is_empty() && missing_nodes > 0,
        format!(
            "{} student documents, {violations} lexicon violations, {missing_nodes} missing-node hints, leaks: {leaks:?}",
            all.len()
        ),
    )
}

const ER_REF: &str = "@startuml\nentity Customer {\n  *id : int\n  --\n  name : varchar(80)\n}\nentity Orders {\n  *id : int\n}\nCustomer ||--o{ Orders : places\n@enduml\n";

fn offline_app() -> TestApp {
    let env: HashMap<&str, &str> = [
        ("DUET_OFFLINE", "1"),
        ("DUET_VISION_ENDPOINT", "http://vision.invalid/v1/chat/completions"),
        ("DUET_TEXT_ENDPOINT", "http://text.invalid/v1/chat/completions"),
        ("DUET_VISION_KEY", "sk-acceptance"),
    ]
    .into_iter()
    .collect();
    let config = GatewayConfig::from_lookup(|k| env.get(k).map(|v| v.to_string()));
    assert!(config.offline);
    common::app_with_config(config, MockTransport::echo())
}

/// Plays a fixed request script; every response is rendered as
/// `status body` and joined.
async fn replay(app: &TestApp) -> Vec<u8> {
    let mut transcript = Vec::new();
    let mut push = |status: u16, body: &[u8]| {
        transcript.extend_from_slice(format!("{status} ").as_bytes());
        transcript.extend_from_slice(body);
        transcript.push(b'\n');
    };
    let class_ref = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus/class_bank.puml")).unwrap();
    let (s, b) = app.send(get("/api/health")).await;
    push(s.as_u16(), &b);
    let (s, b) = app.send(post_json("/api/references", &json!({"name": "bank", "plantuml": class_ref}))).await;
    push(s.as_u16(), &b);
    let class_id = serde_json::from_slice::<Value>(&b).unwrap()["id"].as_str().unwrap().to_string();
    let (s, b) = app.send(post_json("/api/references", &json!({"name": "shop", "kind": "er", "plantuml": ER_REF}))).await;
    push(s.as_u16(), &b);
    let er_id = serde_json::from_slice::<Value>(&b).unwrap()["id"].as_str().unwrap().to_string();
    let students = [
        class_ref.clone(),
        class_ref.replace("SavingsAccount --|> Account", "Account --|> SavingsAccount"),
        class_ref.replace("#balance : double", "+balance : double"),
        class_ref.replace("class Transaction {\n  +amount : double\n  +timestamp : DateTime\n}\n", "").replace("Account \"1\" *-- \"0..*\" Transaction\n", ""),
    ];
    for student in &students {
        for query in ["", "?paraphrase=true"] {
            let uri = format!("/api/references/{class_id}/submissions{query}");
            let (s, b) = app.send(post_json(&uri, &json!({"plantuml": student}))).await;
            push(s.as_u16(), &b);
        }
    }
    let er_student = ER_REF.replace("||--o{", "||--|{").replace("name : varchar(80)", "name : text");
    let (s, b) = app.send(post_json(&format!("/api/references/{er_id}/submissions"), &json!({"plantuml": er_student}))).await;
    push(s.as_u16(), &b);
    let fields: Vec<Field> = vec![
        ("files", Some("one.puml"), students[1].as_bytes()),
        ("files", Some("two.puml"), b"@startuml\nclass {\n@enduml\n"),
        ("files", Some("three.puml"), students[2].as_bytes()),
    ];
    let (s, b) = app.send(multipart(&format!("/api/references/{class_id}/batch"), &fields, &[])).await;
    push(s.as_u16(), &b);
    let image = multipart(&format!("/api/references/{class_id}/submissions"), &[("image", Some("d.png"), PNG)], &[("X-DUET-Vision-Key", "sk-user")]);
    let (s, b) = app.send(image).await;
    push(s.as_u16(), &b);
    for uri in [
        format!("/api/references/{class_id}/analytics"),
        format!("/api/references/{er_id}/analytics"),
        format!("/api/references/{class_id}/submissions"),
        "/api/references".to_string(),
        "/api/references/missing/analytics".to_string(),
    ] {
        let (s, b) = app.send(get(&uri)).await;
        push(s.as_u16(), &b);
    }
    let (s, b) = app.send(Request::post("/api/references").header("content-type", "application/json").body(Body::from("{")).unwrap()).await;
    push(s.as_u16(), &b);
    transcript
}

async fn determinism() -> Outcome {
    let first = offline_app();
    let second = offline_app();
    let a = replay(&first).await;
    let b = replay(&second).await;
    let attempts = first.gateway.network_attempts() + second.gateway.network_attempts();
    let recorded = first.transport.requests().len() + second.transport.requests().len();
    let responses = a.iter().filter(|c| **c == b'\n').count();
    outcome(
        a == b && attempts == 0 && recorded == 0 && responses >= 20,
        format!(
            "{responses} responses, {} bytes per run, identical: {}, network attempts: {attempts}, transport calls: {recorded}",
            a.len(),
            a == b
        ),
    )
}

/// Independent fold over the raw submissions log.
fn recount(path: &std::path::Path, reference: &str) -> (u64, BTreeMap<String, u64>, BTreeMap<String, u64>) {
    let mut total = 0;
    let mut codes = BTreeMap::new();
    let mut categories = BTreeMap::new();
    for line in std::fs::read_to_string(path).unwrap().lines() {
        let record: Value = serde_json::from_str(line).unwrap();
        if record["reference_id"] != reference {
            continue;
        }
        total += 1;
        for tag in record["tags"].as_array().unwrap() {
            let refs = tag["difference_refs"].as_array().unwrap().len() as u64;
            *codes.entry(tag["code"].as_str().unwrap().to_string()).or_insert(0) += refs.max(1);
        }
        for d in record["diff_report"]["differences"].as_array().unwrap() {
            *categories.entry(d["category"].as_str().unwrap().to_string()).or_insert(0) += 1;
        }
    }
    (total, codes, categories)
}

async fn analytics() -> Outcome {
    let app = offline_app();
    let text = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus/class_university.puml")).unwrap();
    let reference = parse_plantuml(&text, None).unwrap().diagram;
    let (_, created) = app.call(post_json("/api/references", &json!({"name": "university", "plantuml": text}))).await;
    let id = created["id"].as_str().unwrap().to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut injected: BTreeMap<String, u64> = BTreeMap::new();
    let mut files = Vec::new();
    while files.len() < 25 {
        let op = MutationOperator::ALL[files.len() % MutationOperator::ALL.len()];
        if let Some(m) = mutate(&reference, op, &mut rng) {
            *injected.entry(m.expected.code.to_string()).or_default() += 1;
            files.push((format!("s{:02}.puml", files.len()), print_plantuml(&m.diagram)));
        }
    }
    let fields: Vec<Field> = files.iter().map(|(n, t)| ("files", Some(n.as_str()), t.as_bytes())).collect();
    let (_, batch) = app.call(multipart(&format!("/api/references/{id}/batch"), &fields, &[])).await;
    let stored = batch["results"].as_array().unwrap().iter().filter(|r| r["submission_id"].is_string()).count();
    let (_, stats) = app.call(get(&format!("/api/references/{id}/analytics"))).await;
    let (total, codes, categories) = recount(&app.store_dir().join("submissions.jsonl"), &id);
    let api_codes: BTreeMap<String, u64> =
        stats["counts"].as_object().unwrap().iter().map(|(k, v)| (k.clone(), v.as_u64().unwrap())).filter(|(_, v)| *v > 0).collect();
    let api_categories: BTreeMap<String, u64> =
        stats["per_category"].as_object().unwrap().iter().map(|(k, v)| (k.clone(), v.as_u64().unwrap())).filter(|(_, v)| *v > 0).collect();
    let injected_seen = injected.iter().all(|(code, n)| codes.get(code).is_some_and(|c| c >= n));
    outcome(
        stored == 25 && stats["total_submissions"] == total && total == 25 && api_codes == codes && api_categories == categories && injected_seen,
        format!("{total} submissions; API counts {api_codes:?} vs recount {codes:?}; injected {injected:?}"),
    )
}

fn oracle_canonical(s: &str) -> Vec<char> {
    s.chars().filter(|c| !c.is_whitespace() && *c != '_' && *c != '-').flat_map(char::to_lowercase).collect()
}

/// Top-down memoized edit distance.
fn oracle_distance(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo).min(go(a, b, i, j + 1, memo)).min(go(a, b, i + 1, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, 0, 0, &mut memo)
}

fn similarity_oracle() -> Outcome {
    const ALPHABET: &[char] = &['a', 'b', 'c', 'A', 'B', 'e', 'r', 's', 't', '_', '-', ' ', 'é', 'É', 'ß', 'x', 'y'];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let word = |rng: &mut ChaCha8Rng| -> String {
        let n = rng.gen_range(1..14);
        (0..n).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
    };
    let mut mismatches = Vec::new();
    for _ in 0..10_000 {
        let a = word(&mut rng);
        let b = if rng.gen_bool(0.5) {
            let mut t: Vec<char> = a.chars().collect();
            let i = rng.gen_range(0..t.len());
            t[i] = *ALPHABET.choose(&mut rng).unwrap();
            t.into_iter().collect()
        } else {
            word(&mut rng)
        };
        let (ca, cb) = (oracle_canonical(&a), oracle_canonical(&b));
        let longest = ca.len().max(cb.len());
        let expected = if longest == 0 { 1.0 } else { (longest - oracle_distance(&ca, &cb)) as f64 / longest as f64 };
        let actual = name_similarity(&a, &b);
        if actual.to_bits() != expected.to_bits() || name_similarity(&b, &a).to_bits() != actual.to_bits() {
            mismatches.push((a, b, actual, expected));
        }
    }
    outcome(mismatches.is_empty(), format!("10000 random pairs, {} mismatches {:?}", mismatches.len(), mismatches.iter().take(3).collect::<Vec<_>>()))
}

fn main() {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let corpus = corpus();
    let all_mutants = corpus_mutants(&corpus);
    let results = [
        ("round-trip", round_trip(&corpus)),
        ("identity diff", identity(&corpus)),
        ("mutation detection", mutation(&all_mutants)),
        ("duality", duality()),
        ("neutrality", neutrality(&all_mutants)),
        ("end-to-end determinism", runtime.block_on(determinism())),
        ("analytics additivity", runtime.block_on(analytics())),
        ("similarity oracle", similarity_oracle()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} criterion {} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
