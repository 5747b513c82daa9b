//! End-to-end tests of the compiled binary: output shapes, documented
//! values, exit codes, and the JSON envelope schema.

use serde_json::Value;
use std::io::Write;
use std::process::{Command, Output, Stdio};

fn dprisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dprisk"))
        .args(args)
        .stdin(Stdio::null())
        .output()
        .expect("binary launches")
}

fn stdout_of(out: &Output) -> String {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).expect("stdout is utf8")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_str(&stdout_of(out)).expect("stdout is json")
}

// A small draft-07 checker covering exactly the keywords the envelope
// schema uses: type, properties, required, additionalProperties, items,
// enum, const, oneOf, and local $ref. Kept here so the schema file stays
// honest without pulling in a validator crate for one fixed document.
mod mini_schema {
    use serde_json::Value;

    pub fn validate(
        schema: &Value,
        instance: &Value,
        root: &Value,
        path: &str,
        errors: &mut Vec<String>,
    ) {
        if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
            let target =
                resolve(root, reference).unwrap_or_else(|| panic!("unresolvable $ref {reference}"));
            validate(target, instance, root, path, errors);
            return;
        }
        if let Some(expected) = schema.get("const") {
            if instance != expected {
                errors.push(format!("{path}: expected const {expected}, got {instance}"));
            }
        }
        if let Some(options) = schema.get("enum").and_then(Value::as_array) {
            if !options.iter().any(|option| option == instance) {
                errors.push(format!("{path}: {instance} not in enum"));
            }
        }
        if let Some(type_spec) = schema.get("type") {
            let names: Vec<&str> = match type_spec {
                Value::String(name) => vec![name.as_str()],
                Value::Array(names) => names.iter().filter_map(Value::as_str).collect(),
                _ => panic!("bad type keyword at {path}"),
            };
            if !names.iter().any(|name| matches_type(name, instance)) {
                errors.push(format!("{path}: type mismatch, wanted {names:?}"));
            }
        }
        if let Some(subschemas) = schema.get("oneOf").and_then(Value::as_array) {
            let matching = subschemas
                .iter()
                .filter(|sub| {
                    let mut scratch = Vec::new();
                    validate(sub, instance, root, path, &mut scratch);
                    scratch.is_empty()
                })
                .count();
            if matching != 1 {
                errors.push(format!(
                    "{path}: oneOf matched {matching} subschemas, wanted 1"
                ));
            }
        }
        if let Value::Object(fields) = instance {
            if let Some(required) = schema.get("required").and_then(Value::as_array) {
                for name in required.iter().filter_map(Value::as_str) {
                    if !fields.contains_key(name) {
                        errors.push(format!("{path}: missing required field {name}"));
                    }
                }
            }
            let properties = schema.get("properties").and_then(Value::as_object);
            for (name, value) in fields {
                match properties.and_then(|props| props.get(name)) {
                    Some(sub) => validate(sub, value, root, &format!("{path}/{name}"), errors),
                    None => {
                        if schema.get("additionalProperties") == Some(&Value::Bool(false)) {
                            errors.push(format!("{path}: unexpected field {name}"));
                        }
                    }
                }
            }
        }
        if let (Value::Array(elements), Some(items)) = (instance, schema.get("items")) {
            for (i, element) in elements.iter().enumerate() {
                validate(items, element, root, &format!("{path}/{i}"), errors);
            }
        }
    }

    fn matches_type(name: &str, instance: &Value) -> bool {
        match name {
            "object" => instance.is_object(),
            "array" => instance.is_array(),
            "string" => instance.is_string(),
            "number" => instance.is_number(),
            "integer" => instance.as_i64().is_some() || instance.as_u64().is_some(),
            "boolean" => instance.is_boolean(),
            "null" => instance.is_null(),
            other => panic!("unknown type name {other}"),
        }
    }

    fn resolve<'a>(root: &'a Value, reference: &str) -> Option<&'a Value> {
        let pointer = reference.strip_prefix('#')?;
        root.pointer(pointer)
    }
}

fn assert_matches_schema(instance: &Value) {
    let schema: Value =
        serde_json::from_str(include_str!("../schema/output.schema.json")).expect("schema parses");
    let mut errors = Vec::new();
    mini_schema::validate(&schema, instance, &schema, "", &mut errors);
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

#[test]
fn bounds_prints_documented_interval() {
    let out = dprisk(&[
        "bounds",
        "--epsilon",
        "0.1",
        "--delta",
        "1e-7",
        "--delta-prime",
        "0.01",
        "--prior",
        "0.5",
    ]);
    let text = stdout_of(&out);
    assert!(text.contains("posterior interval [0.4750"), "got: {text}");
    assert!(text.contains("@ 0.99"), "got: {text}");
    assert!(text.contains("difference band +-0.0250"), "got: {text}");

    // The documented figures are rounded to four decimals; check them on
    // the exact values from the JSON envelope.
    let envelope = json_of(&dprisk(&[
        "--json",
        "bounds",
        "--epsilon",
        "0.1",
        "--delta",
        "1e-7",
        "--delta-prime",
        "0.01",
        "--prior",
        "0.5",
    ]));
    let interval = &envelope["result"]["posterior_interval"];
    let round4 = |x: f64| (x * 1e4).round() / 1e4;
    assert_eq!(round4(interval["lower"].as_f64().unwrap()), 0.4750);
    assert_eq!(round4(interval["upper"].as_f64().unwrap()), 0.5250);
}

#[test]
fn curve_csv_reports_documented_crossing() {
    let out = dprisk(&[
        "curve",
        "--method",
        "basic",
        "--eps-per",
        "0.05",
        "--prior",
        "0.5",
        "--delta-prime",
        "0.05",
        "--criterion",
        "posterior-upper",
        "--k-max",
        "120",
        "--threshold",
        "0.8",
    ]);
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "k,epsilon_total,delta_total,epsilon_prime,criterion_value"
    );
    assert_eq!(lines.len(), 122, "header, 120 rows, crossing comment");
    assert_eq!(lines[121], "# first_crossing,28");

    // Every float field must survive a parse-and-reprint round trip, and the
    // criterion must actually cross the threshold at the reported k.
    let mut value_at = std::collections::HashMap::new();
    for row in &lines[1..=120] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5, "row: {row}");
        let k: u32 = fields[0].parse().expect("integer k");
        for field in &fields[1..] {
            let parsed: f64 = field.parse().expect("float field");
            assert_eq!(&format!("{parsed:.16e}"), field, "round trip of {field}");
        }
        value_at.insert(k, fields[4].parse::<f64>().unwrap());
    }
    assert!(value_at[&27] <= 0.8, "crossing must be first exceedance");
    assert!(value_at[&28] > 0.8);
}

#[test]
fn convert_zcdp_matches_pinned_optimum() {
    let out = dprisk(&[
        "--json",
        "convert",
        "--from",
        "zcdp",
        "--to",
        "pdp",
        "--rho",
        "0.58",
        "--delta-prime",
        "0.01",
    ]);
    let envelope = json_of(&out);
    assert_matches_schema(&envelope);
    let eps_prime = envelope["result"]["epsilon_prime"].as_f64().unwrap();
    assert!(
        (eps_prime - 4.598471959921587).abs() < 1e-6,
        "got {eps_prime}"
    );
    // The bound this certifies: posterior can reach 0.99 from an even prior.
    let posterior = eps_prime.exp() / (1.0 + eps_prime.exp());
    assert!(posterior > 0.99);
}

#[test]
fn mech_tight_delta_matches_enumeration_pin() {
    let out = dprisk(&[
        "--json",
        "mech",
        "--rr",
        "1.0",
        "tight-delta",
        "--epsilon",
        "0.5",
    ]);
    let envelope = json_of(&out);
    assert_matches_schema(&envelope);
    // Exact equality doubles as a check that JSON numbers round-trip.
    assert_eq!(
        envelope["result"]["delta"].as_f64().unwrap(),
        0.28764913664496794
    );
    let forms = &envelope["result"]["forms"];
    assert_eq!(forms["expectation"], forms["tail"]);
}

#[test]
fn every_subcommand_emits_a_schema_valid_envelope() {
    let invocations: Vec<Vec<&str>> = vec![
        vec![
            "--json",
            "bounds",
            "--epsilon",
            "0.5",
            "--delta-prime",
            "0.05",
            "--prior",
            "0.3",
        ],
        vec![
            "--json",
            "convert",
            "--from",
            "dp",
            "--to",
            "pdp",
            "--epsilon",
            "1.0",
            "--delta",
            "1e-6",
            "--delta-prime",
            "1e-5",
        ],
        vec![
            "--json",
            "compose",
            "--method",
            "advanced",
            "-k",
            "49",
            "--eps-per",
            "0.05",
            "--total-delta",
            "0.05",
        ],
        vec![
            "--json",
            "curve",
            "--method",
            "zcdp",
            "--rho-per",
            "0.01",
            "--k-max",
            "10",
            "--delta-prime",
            "0.01",
            "--criterion",
            "diff-magnitude",
        ],
        vec![
            "--json",
            "plan",
            "--max-diff",
            "0.2",
            "--delta-prime",
            "0.01",
            "-k",
            "12",
            "--per-release-delta",
            "1e-8",
            "--total-delta",
            "1e-6",
            "--method",
            "optimal",
        ],
        vec![
            "--json",
            "mech",
            "--counterexample",
            "1.0",
            "0.01",
            "pdp-check",
            "--epsilon",
            "1.0",
            "--delta",
            "0.01",
        ],
        vec![
            "--json",
            "report",
            "--epsilon",
            "1.8",
            "--delta",
            "1e-5",
            "--delta-prime",
            "0.05",
        ],
    ];
    for args in invocations {
        let envelope = json_of(&dprisk(&args));
        assert_matches_schema(&envelope);
        assert_eq!(
            envelope["command"].as_str().unwrap(),
            args[1],
            "args: {args:?}"
        );
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    for args in [
        vec![
            "--json",
            "curve",
            "--method",
            "advanced",
            "--eps-per",
            "0.05",
            "--k-max",
            "60",
            "--delta-prime",
            "0.05",
            "--criterion",
            "ratio-upper",
            "--threshold",
            "4.0",
        ],
        vec![
            "report",
            "--epsilon",
            "1.8",
            "--delta",
            "1e-5",
            "--delta-prime",
            "0.05",
        ],
    ] {
        let first = dprisk(&args);
        let second = dprisk(&args);
        assert_eq!(first.stdout, second.stdout, "args: {args:?}");
    }
}

#[test]
fn plan_solves_documented_schedule() {
    let out = dprisk(&[
        "--json",
        "plan",
        "--max-diff",
        "0.2",
        "--delta-prime",
        "0.01",
        "-k",
        "12",
        "--per-release-delta",
        "1e-8",
        "--total-delta",
        "1e-6",
        "--method",
        "optimal",
    ]);
    let envelope = json_of(&out);
    let report = &envelope["result"]["report"];
    assert!((report["epsilon_prime"].as_f64().unwrap() - 0.8109302162163288).abs() < 1e-9);
    assert!((report["per_release_epsilon"].as_f64().unwrap() - 0.13513096022313015).abs() < 1e-4);
    assert_eq!(envelope["result"]["binding_cap"], "max-diff");
}

#[test]
fn pair_file_round_trips_through_the_oracle() {
    // Randomized response at eps = ln 3, written as an explicit pair.
    let mut file = tempfile::NamedTempFile::new().expect("temp file");
    write!(
        file,
        r#"{{"outcomes": ["yes", "no"], "prob_with": [0.75, 0.25], "prob_without": [0.25, 0.75]}}"#
    )
    .expect("write pair");
    let path = file.path().to_str().unwrap();

    let out = dprisk(&[
        "--json",
        "mech",
        "--pair-file",
        path,
        "tight-delta",
        "--epsilon",
        "0",
    ]);
    let envelope = json_of(&out);
    // At eps = 0 the tight delta is the total variation distance, 0.5 here.
    assert_eq!(envelope["result"]["delta"].as_f64().unwrap(), 0.5);

    let holds = dprisk(&[
        "--json",
        "mech",
        "--pair-file",
        path,
        "pdp-check",
        "--epsilon",
        "1.0986122886681098",
        "--delta",
        "0",
    ]);
    assert_eq!(json_of(&holds)["result"]["holds"], Value::Bool(true));
}

#[test]
fn malformed_pair_files_are_domain_errors() {
    let mut file = tempfile::NamedTempFile::new().expect("temp file");
    write!(
        file,
        r#"{{"outcomes": ["yes", "no"], "prob_with": [0.9, 0.2], "prob_without": [0.25, 0.75]}}"#
    )
    .expect("write pair");
    let out = dprisk(&[
        "mech",
        "--pair-file",
        file.path().to_str().unwrap(),
        "tight-delta",
        "--epsilon",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sums to"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [vec!["frobnicate"], vec!["bounds", "--no-such-flag"], vec![]] {
        let out = dprisk(&args);
        assert_eq!(out.status.code(), Some(1), "args: {args:?}");
        assert!(!out.stderr.is_empty(), "usage text goes to stderr");
    }
    let help = dprisk(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8_lossy(&help.stdout);
    for name in [
        "bounds", "convert", "compose", "curve", "plan", "mech", "report",
    ] {
        assert!(text.contains(name), "help lists {name}");
    }
}

#[test]
fn domain_errors_exit_two() {
    // delta at or above delta' leaves no confidence to spend.
    let out = dprisk(&[
        "bounds",
        "--epsilon",
        "1",
        "--delta",
        "0.5",
        "--delta-prime",
        "0.01",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(out.stdout.is_empty(), "errors never print a partial result");

    // Structurally valid flags, unsupported direction.
    let out = dprisk(&["convert", "--from", "pdp", "--to", "zcdp", "--epsilon", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_requests_exit_three() {
    // Per-release deltas alone overrun the schedule's total delta.
    let out = dprisk(&[
        "plan",
        "--max-ratio",
        "2",
        "--delta-prime",
        "0.01",
        "-k",
        "10",
        "--per-release-delta",
        "1e-3",
        "--total-delta",
        "1e-6",
        "--method",
        "basic",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("total_delta"));

    // No frontier point fits under an absurdly small delta target.
    let out = dprisk(&[
        "compose",
        "--method",
        "optimal",
        "-k",
        "10",
        "--eps-per",
        "0.3",
        "--delta-per",
        "1e-2",
        "--target-delta",
        "1e-9",
    ]);
    assert_eq!(out.status.code(), Some(3));
}
