//! Independent reference implementations. Nothing here calls the solver,
//! the evaluator or the parseInt model of the library under test.

#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::OnceLock;

use canarylift::forge::{generate, ForgeManifest, ForgeVariant, GroundTruth};
use regex::Regex;
use serde_json::Value;

/// `parseInt(s)` written from the ECMA-262 algorithm with a regex.
pub fn oracle_parse_int(s: &str) -> f64 {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(
            r"^[\t\n\x0B\x0C\r \u{A0}\u{1680}\u{2000}-\u{200A}\u{2028}\u{2029}\u{202F}\u{205F}\u{3000}\u{FEFF}]*([+-]?)(?:0[xX]([0-9a-fA-F]*)|([0-9]+))",
        )
        .unwrap()
    });
    let Some(caps) = re.captures(s) else {
        return f64::NAN;
    };
    let magnitude = match (caps.get(2), caps.get(3)) {
        (Some(hex), _) if hex.as_str().is_empty() => return f64::NAN,
        (Some(hex), _) => hex
            .as_str()
            .chars()
            .fold(0.0, |acc, c| acc * 16.0 + c.to_digit(16).unwrap() as f64),
        (_, Some(dec)) => dec.as_str().parse::<f64>().unwrap(),
        _ => unreachable!(),
    };
    if &caps[1] == "-" {
        -magnitude
    } else {
        magnitude
    }
}

/// Evaluates a serialized checksum expression over `table`.
pub fn oracle_eval(expr: &Value, table: &VecDeque<String>, base: u32) -> f64 {
    let obj = expr.as_object().expect("externally tagged enum");
    let (tag, body) = obj.iter().next().unwrap();
    match tag.as_str() {
        "const" => body.as_f64().unwrap(),
        "term" => {
            let index = body.as_u64().unwrap() as u32;
            oracle_parse_int(&table[(index - base) as usize])
        }
        "neg" => -oracle_eval(body, table, base),
        "binary" => {
            let l = oracle_eval(&body["left"], table, base);
            let r = oracle_eval(&body["right"], table, base);
            match body["op"].as_str().unwrap() {
                "Add" => l + r,
                "Sub" => l - r,
                "Mul" => l * r,
                "Div" => l / r,
                other => panic!("unknown operator {other}"),
            }
        }
        other => panic!("unknown node {other}"),
    }
}

/// Runs the canary loop literally: check, then `push(shift())`, giving up
/// after one full cycle.
pub fn oracle_rotation(shipped: &[String], expr: &Value, target: f64, base: u32) -> Option<usize> {
    let mut table: VecDeque<String> = shipped.iter().cloned().collect();
    for step in 0..table.len() {
        if oracle_eval(expr, &table, base) == target {
            return Some(step);
        }
        let head = table.pop_front().unwrap();
        table.push_back(head);
    }
    None
}

/// The string array literal of a forged file, read with a regex and decoded
/// as JSON strings.
pub fn oracle_shipped_table(source: &str) -> Vec<String> {
    let array = Regex::new(r#"(?s)(?:const t|var \w+) = \[(.*?)\n\s*\]"#).unwrap();
    let literal = Regex::new(r#""(?:[^"\\]|\\.)*""#).unwrap();
    let body = &array.captures(source).expect("forged array")[1];
    literal
        .find_iter(body)
        .map(|m| serde_json::from_str::<String>(m.as_str()).unwrap())
        .collect()
}

pub fn checksum_json(truth: &GroundTruth) -> Value {
    serde_json::to_value(truth.checksum.as_ref().unwrap()).unwrap()
}

/// Manifest for round-trip sample `i`: random shape, with the first and last
/// rotation forced every fifty samples.
pub fn round_trip_manifest(i: u64) -> ForgeManifest {
    let mut m = ForgeManifest::sample(i, ForgeVariant::Checksum);
    let len = m.table_len();
    match i % 50 {
        0 => m.rotation = 0,
        1 => m.rotation = len - 1,
        _ => {}
    }
    m
}

pub fn forged(m: &ForgeManifest) -> (String, GroundTruth) {
    generate(m).unwrap_or_else(|e| panic!("forge failed for {m:?}: {e}"))
}

/// Checks that `after` equals `before` outside `spans`, by matching a regex
/// built from the untouched segments of `before`. Returns the text that
/// replaced each span.
pub fn replaced_segments(
    before: &str,
    spans: &[(usize, usize)],
    after: &str,
) -> Option<Vec<String>> {
    let mut pattern = String::from("(?s)^");
    let mut cursor = 0;
    for &(start, end) in spans {
        pattern.push_str(&regex::escape(&before[cursor..start]));
        pattern.push_str("(.*?)");
        cursor = end;
    }
    pattern.push_str(&regex::escape(&before[cursor..]));
    pattern.push('$');
    let re = regex::RegexBuilder::new(&pattern)
        .size_limit(1 << 26)
        .build()
        .unwrap();
    let caps = re.captures(after)?;
    Some(
        caps.iter()
            .skip(1)
            .map(|m| m.unwrap().as_str().to_string())
            .collect(),
    )
}

/// `parseInt` inputs with the values a conforming engine returns.
pub const PARSE_INT_CASES: [(&str, f64); 40] = [
    ("763343ZEEmqI", 763343.0),
    ("VALUE_7", f64::NAN),
    ("10MjwbHE", 10.0),
    ("  -42abc", -42.0),
    ("0x1Az", 26.0),
    ("", f64::NAN),
    ("   ", f64::NAN),
    ("-", f64::NAN),
    ("+", f64::NAN),
    ("+7", 7.0),
    ("-0", -0.0),
    ("0", 0.0),
    ("00012", 12.0),
    ("  \t\n 99 bottles", 99.0),
    ("  \u{FEFF}15", 15.0),
    ("\u{200B}15", f64::NAN),
    ("0X1f", 31.0),
    ("-0x10", -16.0),
    ("+0xff", 255.0),
    ("0x", f64::NAN),
    ("0xg", f64::NAN),
    ("0x-1", f64::NAN),
    ("1e3", 1.0),
    ("1.9", 1.0),
    ("-.5", f64::NAN),
    (".5", f64::NAN),
    ("12.34.56", 12.0),
    ("Infinity", f64::NAN),
    ("-Infinity", f64::NAN),
    ("NaN", f64::NAN),
    ("9007199254740993", 9007199254740992.0),
    ("123456789012345678901234567890", 1.2345678901234568e29),
    ("0xFFFFFFFFFFFFFFFFF", 295147905179352830000.0),
    ("1000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000000", f64::INFINITY),
    ("--5", f64::NAN),
    ("+-5", f64::NAN),
    ("\u{3000}\u{2028}7", 7.0),
    ("12abc34", 12.0),
    ("\u{0663}", f64::NAN),
    ("0x1_0", 1.0),
];

/// Same double, with every NaN equal to every other and `-0` distinct from
/// `0`.
pub fn same_double(a: f64, b: f64) -> bool {
    (a.is_nan() && b.is_nan()) || a.to_bits() == b.to_bits()
}

/// The checksum IIFE as published.
pub const AC_IIFE: &str = r#"(function (u, A) {
    const h = a0A,
        E = u();
    while (!![]) {
        try {
            const D =
                (parseInt(h(0x154)) / 0x1) *
                (-parseInt(h(0x152)) / 0x2) +
                (-parseInt(h(0x156)) / 0x3) *
                (parseInt(h(0x162)) / 0x4) +
                -parseInt(h(0x15b)) / 0x5 +
                -parseInt(h(0x151)) / 0x6 +
                parseInt(h(0x15e)) / 0x7 +
                (parseInt(h(0x159)) / 0x8) *
                (parseInt(h(0x157)) / 0x9) +
                (parseInt(h(0x15f)) / 0xa) *
                (parseInt(h(0x160)) / 0xb);
            if (D === A) break;
            else E["push"](E["shift"]());
        } catch (v) {
            E["push"](E["shift"]());
        }
    }
})(a0u, 0x6f0ff);"#;

/// The simplified listing with the table inlined.
pub const AC1: &str = r#"(function (u, A) {
    const h = [ "763343ZEEmqI", "10MjwbHE", "9850357GcgXRv",
    "VALUE_7", "143668KLzuHC", "2744166fvKFHm", "159958nePvPH",
    "VALUE_1", "1UiidKZ", "VALUE_2", "51QZYsCO", "9rBvnZg",
    "VALUE_3", "6312632cMablh", "VALUE_4", "953875DutVaJ",
    "VALUE_5", "VALUE_6", ];

    while (true) {
        try {
            const D =
                (parseInt(h[3]) / 1) *
                (-parseInt(h[1]) / 2) +
                (-parseInt(h[5]) / 3) *
                (parseInt(h[17]) / 4) +
                -parseInt(h[10]) / 5 +
                -parseInt(h[0]) / 6 +
                parseInt(h[13]) / 7 +
                (parseInt(h[8]) / 8) *
                (parseInt(h[6]) / 9) +
                (parseInt(h[14]) / 10) *
                (parseInt(h[15]) / 11);
            if (D === 0x6f0ff) break;
            else h["push"](h["shift"]());
        } catch (v) {
            h["push"](h["shift"]());
        }
    }
})(a0u, 0x6f0ff);"#;

pub const EMOTET: &str = "(function(c, d) {\n    var e = function(f) {\n        while (--f) {\n            c['push'] (c['shift']());\n        }\n    };\n    e(++d);\n} (a, 0xea));";

pub const AC1_TABLE: [&str; 18] = [
    "763343ZEEmqI",
    "10MjwbHE",
    "9850357GcgXRv",
    "VALUE_7",
    "143668KLzuHC",
    "2744166fvKFHm",
    "159958nePvPH",
    "VALUE_1",
    "1UiidKZ",
    "VALUE_2",
    "51QZYsCO",
    "9rBvnZg",
    "VALUE_3",
    "6312632cMablh",
    "VALUE_4",
    "953875DutVaJ",
    "VALUE_5",
    "VALUE_6",
];

/// Quotients of the unrotated checksum as printed: (numerator, divisor).
pub const AC2_QUOTIENTS: [(f64, f64); 11] = [
    (f64::NAN, 1.0),
    (-10.0, 2.0),
    (-2744166.0, 3.0),
    (f64::NAN, 4.0),
    (-51.0, 5.0),
    (-763343.0, 6.0),
    (6312632.0, 7.0),
    (1.0, 8.0),
    (159958.0, 9.0),
    (f64::NAN, 10.0),
    (953875.0, 11.0),
];

/// A file built from the published pieces: the checksum IIFE, the table in
/// a self-caching function and a decoder with no offset subtraction.
pub fn listing_file() -> String {
    let table: Vec<String> = AC1_TABLE.iter().map(|s| format!("\"{s}\"")).collect();
    format!(
        "{AC_IIFE}\nfunction a0A(u, A) {{\n    const E = a0u();\n    return E[u];\n}}\nfunction a0u() {{\n    const t = [{}];\n    a0u = function () {{\n        return t;\n    }};\n    return a0u();\n}}\n",
        table.join(", ")
    )
}

/// Runs `script` with node, if it is installed. `None` when it is not.
pub fn run_node(script: &str) -> Option<Result<String, String>> {
    use std::process::Command;
    use std::sync::atomic::{AtomicUsize, Ordering};
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    Command::new("node").arg("--version").output().ok()?;
    let path = std::env::temp_dir().join(format!(
        "canarylift-{}-{}.js",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&path, script).unwrap();
    let out = Command::new("node").arg(&path).output();
    let _ = std::fs::remove_file(&path);
    let out = out.ok()?;
    Some(if out.status.success() {
        Ok(String::from_utf8(out.stdout).unwrap())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    })
}

pub const GOLDEN_HARNESS: &str = "tests/golden/harness_len18_seed42.js";

/// The manifest behind the golden harness.
pub fn golden_manifest() -> ForgeManifest {
    ForgeManifest::synthetic(18, 7, 11, 0x151, 42, ForgeVariant::Checksum)
}
