use std::collections::BTreeMap;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::names::{random_letters, Names};
use super::{ForgeError, ForgeManifest, ForgeVariant, GroundTruth, MAX_RESAMPLES};
use crate::canary::{evaluate_checksum, render_number, ArithOp, ChecksumExpr, StringTable};
use crate::emit::{quote_js_string, Hex};

/// Builds a canaried script and its ground truth. Identical manifests give
/// byte-identical output.
pub fn generate(manifest: &ForgeManifest) -> Result<(String, GroundTruth), ForgeError> {
    manifest.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(manifest.seed);
    let names = Names::generate(
        manifest.identifier_style,
        manifest.alias_functions,
        &mut rng,
    );
    match manifest.variant {
        ForgeVariant::Checksum => checksum_sample(manifest, &names, &mut rng),
        ForgeVariant::FixedCount => Ok(fixed_count_sample(manifest, &names, &mut rng)),
    }
}

struct ChecksumDraw {
    canonical: Vec<String>,
    canary_slots: Vec<usize>,
    expr: ChecksumExpr,
    target: f64,
}

fn canary_string(rng: &mut impl Rng) -> String {
    format!(
        "{}{}",
        rng.gen_range(1..=10_000_000u32),
        random_letters(rng, 6)
    )
}

/// One quotient `±parseInt(h(i)) / d`.
fn quotient(rng: &mut impl Rng, index: u32) -> ChecksumExpr {
    let term = ChecksumExpr::Term(index);
    let signed = if rng.gen_bool(0.5) {
        ChecksumExpr::negate(term)
    } else {
        term
    };
    ChecksumExpr::binary(
        ArithOp::Div,
        signed,
        ChecksumExpr::Const(rng.gen_range(1..=11) as f64),
    )
}

/// A sum of single quotients and products of two quotients over `indices`.
fn checksum_expression(rng: &mut impl Rng, indices: &[u32]) -> ChecksumExpr {
    let mut summands = Vec::new();
    let mut rest = indices;
    while let Some((&first, tail)) = rest.split_first() {
        match tail.split_first() {
            Some((&second, tail2)) if rng.gen_bool(0.5) => {
                summands.push(ChecksumExpr::binary(
                    ArithOp::Mul,
                    quotient(rng, first),
                    quotient(rng, second),
                ));
                rest = tail2;
            }
            _ => {
                summands.push(quotient(rng, first));
                rest = tail;
            }
        }
    }
    summands
        .into_iter()
        .reduce(|acc, s| ChecksumExpr::binary(ArithOp::Add, acc, s))
        .expect("at least one term")
}

fn draw_checksum(manifest: &ForgeManifest, rng: &mut impl Rng) -> Result<ChecksumDraw, ForgeError> {
    let len = manifest.table_len();
    let base = manifest.base.0;
    for _ in 0..MAX_RESAMPLES {
        let mut canary_slots: Vec<usize> =
            rand::seq::index::sample(rng, len, manifest.canary_count).into_vec();
        canary_slots.sort_unstable();

        let mut payload = manifest.payload_strings.iter();
        let canonical: Vec<String> = (0..len)
            .map(|k| {
                if canary_slots.binary_search(&k).is_ok() {
                    canary_string(rng)
                } else {
                    payload
                        .next()
                        .expect("payload fills the other slots")
                        .clone()
                }
            })
            .collect();

        // Only canary slots are referenced: any other slot parses to NaN
        // and no target could equal the sum.
        let term_count = manifest.canary_count.max(rng.gen_range(7..=13));
        let mut slots = canary_slots.clone();
        while slots.len() < term_count {
            slots.push(*canary_slots.choose(rng).expect("at least one canary"));
        }
        slots.shuffle(rng);
        let indices: Vec<u32> = slots.iter().map(|&k| base + k as u32).collect();
        let expr = checksum_expression(rng, &indices);

        let table = StringTable::new(canonical.clone());
        let target = evaluate_checksum(&expr, &table, 0, base).expect("terms are in range");
        if !target.is_finite() {
            continue;
        }
        // The canonical order must be the only one that satisfies the check.
        let unique =
            (1..len).all(|r| evaluate_checksum(&expr, &table, r, base).is_ok_and(|v| v != target));
        if unique {
            return Ok(ChecksumDraw {
                canonical,
                canary_slots,
                expr,
                target,
            });
        }
    }
    Err(ForgeError::Exhausted(MAX_RESAMPLES))
}

/// The table rotated right by `r`: `r` push/shift steps restore the input.
fn ship(canonical: &[String], r: usize) -> Vec<String> {
    let mut shipped = canonical.to_vec();
    shipped.rotate_right(r);
    shipped
}

fn array_literal(entries: &[String], indent: &str) -> String {
    let mut out = String::from("[");
    for (i, chunk) in entries.chunks(4).enumerate() {
        let line: Vec<String> = chunk.iter().map(|s| quote_js_string(s)).collect();
        if i > 0 {
            out.push(',');
        }
        write!(out, "\n{indent}    {}", line.join(", ")).unwrap();
    }
    write!(out, "\n{indent}]").unwrap();
    out
}

/// Payload functions that alias the decoder and, between them, call it
/// with every index in range. Returns the source and the names of the
/// functions that touch no host globals.
fn payload_functions(
    names: &Names,
    decoder: &str,
    base: u32,
    len: usize,
    rng: &mut impl Rng,
) -> (String, Vec<String>) {
    let mut indices: Vec<u32> = (0..len as u32).map(|k| base + k).collect();
    indices.shuffle(rng);
    let count = names.payload.len();
    let mut groups: Vec<Vec<u32>> = vec![Vec::new(); count];
    for (i, index) in indices.into_iter().enumerate() {
        groups[i % count].push(index);
    }
    for group in groups.iter_mut().filter(|g| g.is_empty()) {
        group.push(base + rng.gen_range(0..len as u32));
    }

    let mut out = String::new();
    let mut closed = Vec::new();
    for (name, group) in names.payload.iter().zip(groups) {
        let open = rng.gen_bool(0.5);
        writeln!(out, "function {name}(p, q) {{").unwrap();
        writeln!(out, "    const h = {decoder};").unwrap();
        writeln!(out, "    const w = [];").unwrap();
        for (i, index) in group.iter().enumerate() {
            let line = match (open, i % 3) {
                (true, 0) => format!("document[h({index:#x})] = p + q;"),
                (true, 1) => format!("console[\"log\"](h({index:#x}), p);"),
                (_, 0) => format!("w[\"push\"](h({index:#x}) + p);"),
                (_, 1) => format!("w[\"push\"](q + h({index:#x}));"),
                _ => format!("w[\"push\"](h({index:#x}));"),
            };
            writeln!(out, "    {line}").unwrap();
        }
        writeln!(out, "    return w[\"join\"](\" \");").unwrap();
        writeln!(out, "}}").unwrap();
        if !open {
            closed.push(name.clone());
        }
    }
    (out, closed)
}

fn resolution_map(base: u32, canonical: &[String]) -> BTreeMap<Hex, String> {
    canonical
        .iter()
        .enumerate()
        .map(|(k, s)| (Hex(base + k as u32), s.clone()))
        .collect()
}

fn checksum_sample(
    manifest: &ForgeManifest,
    names: &Names,
    rng: &mut ChaCha8Rng,
) -> Result<(String, GroundTruth), ForgeError> {
    let draw = draw_checksum(manifest, rng)?;
    let len = draw.canonical.len();
    let base = manifest.base.0;
    let shipped = ship(&draw.canonical, manifest.rotation);
    let (arr, dec) = (&names.array_function, &names.decoder);
    let (payload, mut closed) = payload_functions(names, dec, base, len, rng);

    let mut src = String::new();
    writeln!(src, "(function (u, A) {{").unwrap();
    writeln!(src, "    const h = {dec},").unwrap();
    writeln!(src, "        E = u();").unwrap();
    writeln!(src, "    while (!![]) {{").unwrap();
    writeln!(src, "        try {{").unwrap();
    writeln!(src, "            const D = {};", draw.expr.render("h")).unwrap();
    writeln!(src, "            if (D === A) break;").unwrap();
    writeln!(src, "            else E[\"push\"](E[\"shift\"]());").unwrap();
    writeln!(src, "        }} catch (v) {{").unwrap();
    writeln!(src, "            E[\"push\"](E[\"shift\"]());").unwrap();
    writeln!(src, "        }}").unwrap();
    writeln!(src, "    }}").unwrap();
    writeln!(src, "}})({arr}, {});", render_number(draw.target)).unwrap();
    src.push_str(&payload);
    writeln!(src, "function {dec}(u, A) {{").unwrap();
    writeln!(src, "    u = u - {base:#x};").unwrap();
    writeln!(src, "    const E = {arr}();").unwrap();
    writeln!(src, "    const x = E[u];").unwrap();
    writeln!(src, "    return x;").unwrap();
    writeln!(src, "}}").unwrap();
    writeln!(src, "function {arr}() {{").unwrap();
    writeln!(src, "    const t = {};", array_literal(&shipped, "    ")).unwrap();
    writeln!(src, "    {arr} = function () {{").unwrap();
    writeln!(src, "        return t;").unwrap();
    writeln!(src, "    }};").unwrap();
    writeln!(src, "    return {arr}();").unwrap();
    writeln!(src, "}}").unwrap();
    closed.push(dec.clone());
    closed.push(arr.clone());

    let truth = GroundTruth {
        variant: ForgeVariant::Checksum,
        shipped_table: shipped,
        resolution: resolution_map(base, &draw.canonical),
        canonical_table: draw.canonical,
        rotation: manifest.rotation,
        target: Some(draw.target),
        target_bits: Some(format!("{:#018x}", draw.target.to_bits())),
        checksum: Some(draw.expr),
        fixed_count_literal: None,
        canary_indices: draw.canary_slots,
        decoder_name: dec.clone(),
        array_function: arr.clone(),
        base: manifest.base,
        end: Hex(base + len as u32),
        alias_count: names.payload.len() + 1,
        closed_function_names: closed,
    };
    Ok((src, truth))
}

fn fixed_count_sample(
    manifest: &ForgeManifest,
    names: &Names,
    rng: &mut ChaCha8Rng,
) -> (String, GroundTruth) {
    let canonical = manifest.payload_strings.clone();
    let len = canonical.len();
    let base = manifest.base.0;
    let shipped = ship(&canonical, manifest.rotation);
    let (arr, dec) = (&names.array_function, &names.decoder);

    // `e(++d)` with `while (--f)` runs exactly `d` iterations.
    let laps = rng.gen_range(u64::from(manifest.rotation == 0)..=3);
    let literal = manifest.rotation as u64 + laps * len as u64;
    let (payload, closed) = payload_functions(names, dec, base, len, rng);

    let mut src = String::new();
    writeln!(src, "var {arr} = {};", array_literal(&shipped, "")).unwrap();
    writeln!(src, "(function (c, d) {{").unwrap();
    writeln!(src, "    var e = function (f) {{").unwrap();
    writeln!(src, "        while (--f) {{").unwrap();
    writeln!(src, "            c[\"push\"](c[\"shift\"]());").unwrap();
    writeln!(src, "        }}").unwrap();
    writeln!(src, "    }};").unwrap();
    writeln!(src, "    e(++d);").unwrap();
    writeln!(src, "}}({arr}, {literal:#x}));").unwrap();
    writeln!(src, "var {dec} = function (u, A) {{").unwrap();
    writeln!(src, "    u = u - {base:#x};").unwrap();
    writeln!(src, "    var x = {arr}[u];").unwrap();
    writeln!(src, "    return x;").unwrap();
    writeln!(src, "}};").unwrap();
    src.push_str(&payload);

    let truth = GroundTruth {
        variant: ForgeVariant::FixedCount,
        shipped_table: shipped,
        resolution: resolution_map(base, &canonical),
        canonical_table: canonical,
        rotation: manifest.rotation,
        target: None,
        target_bits: None,
        checksum: None,
        fixed_count_literal: Some(literal),
        canary_indices: Vec::new(),
        decoder_name: dec.clone(),
        array_function: arr.clone(),
        base: manifest.base,
        end: Hex(base + len as u32),
        alias_count: names.payload.len(),
        closed_function_names: closed,
    };
    (src, truth)
}
