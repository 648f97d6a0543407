mod common;

use std::collections::{BTreeMap, VecDeque};

use canarylift::analysis::{
    decoder_base_offset, filter_closed_functions, find_function_definition, inventory_symbols,
    largest_string_array, most_reassigned_variable,
};
use canarylift::canary::{
    evaluate_checksum, numeric_prefix_parse, resolve, solve_rotation, CanaryError, CanaryModel,
    CanaryVariant, ChecksumExpr, StringTable,
};
use canarylift::emit::{apply_rewrite, Edit, Hex, Outcome, RewritePlan};
use canarylift::forge::{corrupt, generate, ForgeManifest, ForgeVariant};
use canarylift::lift::{analyze, lift};
use canarylift::syntax::{parse, Span};
use common::*;
use proptest::prelude::*;

fn manifest_strategy(variant: ForgeVariant) -> impl Strategy<Value = ForgeManifest> {
    (4usize..=64, any::<u64>(), 0u32..0x1000, 1usize..=4).prop_flat_map(
        move |(len, seed, base, aliases)| {
            (1..=len / 2, 0..len).prop_map(move |(canaries, rotation)| {
                let mut m = ForgeManifest::synthetic(len, canaries, rotation, base, seed, variant);
                m.alias_functions = aliases;
                m
            })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn checksum_round_trip(m in manifest_strategy(ForgeVariant::Checksum)) {
        let (src, truth) = generate(&m).unwrap();
        let lifted = lift("p.js", &src);
        prop_assert_eq!(lifted.report.outcome, Outcome::Solved);
        prop_assert_eq!(lifted.report.rotation, Some(m.rotation));
        let got: BTreeMap<Hex, String> = lifted
            .resolution
            .unwrap()
            .iter()
            .map(|(i, s)| (Hex(i), s.to_string()))
            .collect();
        prop_assert_eq!(got, truth.resolution);
        prop_assert!(lifted.report.is_consistent());
    }

    #[test]
    fn fixed_count_round_trip(m in manifest_strategy(ForgeVariant::FixedCount)) {
        let (src, truth) = generate(&m).unwrap();
        let lifted = lift("p.js", &src);
        prop_assert_eq!(lifted.report.rotation, Some(m.rotation));
        prop_assert_eq!(lifted.resolution.unwrap().entries, truth.canonical_table);
    }

    #[test]
    fn pipeline_pass_through(m in manifest_strategy(ForgeVariant::Checksum)) {
        let (src, truth) = generate(&m).unwrap();
        let tree = parse(&src).unwrap();
        let (name, count) = most_reassigned_variable(&tree).unwrap();
        prop_assert_eq!(&name, &truth.decoder_name);
        prop_assert_eq!(count, truth.alias_count);
        prop_assert_eq!(largest_string_array(&tree).unwrap().elements, truth.shipped_table.clone());
        let decoder = find_function_definition(&tree, &name).unwrap();
        prop_assert_eq!(decoder_base_offset(&decoder.as_statement(), &tree, &name).unwrap(), m.base.0);
        let closed: Vec<String> = filter_closed_functions(&tree, &inventory_symbols(&tree))
            .into_iter()
            .map(|f| f.name)
            .collect();
        let mut want = truth.closed_function_names.clone();
        want.sort();
        let mut closed_sorted = closed;
        closed_sorted.sort();
        prop_assert_eq!(closed_sorted, want);
    }

    #[test]
    fn target_is_bit_exact(m in manifest_strategy(ForgeVariant::Checksum)) {
        let (_, truth) = generate(&m).unwrap();
        let canonical = StringTable::new(truth.canonical_table.clone());
        let value = evaluate_checksum(truth.checksum.as_ref().unwrap(), &canonical, 0, truth.base.0).unwrap();
        prop_assert_eq!(value.to_bits(), truth.target.unwrap().to_bits());
        let oracle_table: VecDeque<String> = truth.canonical_table.iter().cloned().collect();
        let oracle = oracle_eval(&checksum_json(&truth), &oracle_table, truth.base.0);
        prop_assert_eq!(oracle.to_bits(), value.to_bits());
        prop_assert_eq!(truth.target_bits.clone().unwrap(), format!("{:#018x}", value.to_bits()));
    }

    #[test]
    fn tampering_is_unsatisfiable(m in manifest_strategy(ForgeVariant::Checksum), pick in any::<usize>(), seed in any::<u64>()) {
        let (src, truth) = generate(&m).unwrap();
        let slot = truth.canary_indices[pick % truth.canary_indices.len()];
        let tampered = corrupt(&src, &truth, slot, seed).unwrap();
        let lifted = lift("t.js", &tampered);
        prop_assert_eq!(lifted.report.outcome, Outcome::Unsatisfiable);
        prop_assert!(lifted.report.rotation.is_none());
        // Only the one literal changed.
        let array = largest_string_array(&parse(&src).unwrap()).unwrap();
        let span = array.element_spans[truth.shipped_position(slot)];
        let replaced = replaced_segments(&src, &[(span.start, span.end)], &tampered);
        prop_assert!(replaced.is_some());
    }

    #[test]
    fn rotation_has_period_len(entries in prop::collection::vec("[a-z0-9]{0,4}", 1..=64), r in 0usize..200) {
        let table = StringTable::new(entries.clone());
        prop_assert_eq!(table.rotated_left(entries.len()), table.clone());
        prop_assert_eq!(table.rotated_left(r + entries.len()), table.rotated_left(r));
        let mut deque: VecDeque<String> = entries.iter().cloned().collect();
        for _ in 0..r { let h = deque.pop_front().unwrap(); deque.push_back(h); }
        prop_assert_eq!(table.rotated_left(r).entries, Vec::from(deque));
    }

    #[test]
    fn evaluation_is_deterministic(m in manifest_strategy(ForgeVariant::Checksum), r in 0usize..64) {
        let (_, truth) = generate(&m).unwrap();
        let shipped = truth.shipped();
        let r = r % shipped.len();
        let expr = truth.checksum.as_ref().unwrap();
        let a = evaluate_checksum(expr, &shipped, r, truth.base.0).unwrap();
        let b = evaluate_checksum(expr, &shipped, r, truth.base.0).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn parse_int_agrees_with_oracle(s in "[ \t\n\u{a0}\u{feff}]{0,2}[+-]?(0[xX])?[0-9a-fA-FxX._-]{0,12}[a-zA-Z ]{0,3}") {
        let got = numeric_prefix_parse(&s);
        let want = oracle_parse_int(&s);
        prop_assert!(same_double(got, want), "{:?}: {} vs {}", s, got, want);
    }

    #[test]
    fn rewrite_conserves_bytes(src in "[a-z ;\n]{0,60}", cuts in prop::collection::vec((0usize..60, 0usize..6, "[A-Z\"]{0,4}"), 0..5)) {
        let mut edits: Vec<Edit> = Vec::new();
        let mut cursor = 0;
        let mut sorted = cuts.clone();
        sorted.sort();
        for (start, len, text) in sorted {
            let start = start.max(cursor).min(src.len());
            let end = (start + len).min(src.len());
            edits.push(Edit { span: Span::new(start, end), replacement: text });
            cursor = end;
        }
        let plan = RewritePlan { edits: edits.clone(), skipped: vec![] };
        let out = apply_rewrite(&src, &plan).unwrap();
        let spans: Vec<(usize, usize)> = edits.iter().map(|e| (e.span.start, e.span.end)).collect();
        prop_assert!(replaced_segments(&src, &spans, &out).is_some());
    }
}

#[test]
fn solver_spends_at_most_len_evaluations() {
    for seed in 0..20 {
        let (src, truth) = generate(&ForgeManifest::sample(seed, ForgeVariant::Checksum)).unwrap();
        let model = analyze(&src).unwrap().model;
        let solved = solve_rotation(&model).unwrap();
        assert_eq!(solved.evaluations, truth.rotation + 1);
        assert!(solved.evaluations <= truth.len());
    }
}

#[test]
fn nan_poisons_the_checksum() {
    let (src, truth) = generate(&ForgeManifest::sample(7, ForgeVariant::Checksum)).unwrap();
    let model = analyze(&src).unwrap().model;
    let CanaryVariant::Checksum { expr, .. } = &model.variant else {
        panic!()
    };
    // Any rotation that moves a payload string into a referenced slot is NaN.
    let nan_rotation = (0..truth.len()).find(|&r| {
        expr.terms()
            .iter()
            .any(|&i| numeric_prefix_parse(model.table.at(r, (i - model.base) as usize)).is_nan())
    });
    let r = nan_rotation.expect("some rotation exposes a payload slot");
    assert!(evaluate_checksum(expr, &model.table, r, model.base)
        .unwrap()
        .is_nan());
}

#[test]
fn resolve_matches_ground_truth() {
    let (src, truth) = generate(&ForgeManifest::sample(11, ForgeVariant::Checksum)).unwrap();
    let fixpoint = lift("r.js", &src).resolution.unwrap().fixpoint();
    for (index, want) in &truth.resolution {
        assert_eq!(resolve(&fixpoint, truth.base.0, index.0).unwrap(), want);
    }
    assert_eq!(
        resolve(&fixpoint, truth.base.0, truth.base.0).unwrap(),
        truth.canonical_table[0]
    );
    assert!(matches!(
        resolve(&fixpoint, truth.base.0, truth.end.0),
        Err(CanaryError::IndexOutOfRange { .. })
    ));
}

#[test]
fn lifted_output_contains_every_payload_string() {
    let m = ForgeManifest::synthetic(30, 6, 13, 0x200, 3, ForgeVariant::Checksum);
    let (src, truth) = generate(&m).unwrap();
    let lifted = lift("l.js", &src);
    let out = lifted.output.unwrap();
    parse(&out).unwrap();
    for s in &m.payload_strings {
        assert!(
            out.contains(&canarylift::emit::quote_js_string(s)),
            "{s} missing"
        );
    }
    // The rotation IIFE is kept verbatim.
    let iife_start = src.find("(function (u, A)").unwrap();
    let iife_end = src
        .find(&format!("}})({}, ", truth.array_function))
        .unwrap();
    assert_eq!(&out[iife_start..iife_end], &src[iife_start..iife_end]);
}

#[test]
fn restoring_a_corrupted_literal_solves_again() {
    let (src, truth) = generate(&ForgeManifest::sample(21, ForgeVariant::Checksum)).unwrap();
    let slot = truth.canary_indices[0];
    let tampered = corrupt(&src, &truth, slot, 5).unwrap();
    let original = &truth.shipped_table[truth.shipped_position(slot)];
    let array = largest_string_array(&parse(&tampered).unwrap()).unwrap();
    let span = array.element_spans[truth.shipped_position(slot)];
    let restored = format!(
        "{}\"{original}\"{}",
        &tampered[..span.start],
        &tampered[span.end..]
    );
    assert_eq!(restored, src);
    assert_eq!(
        lift("r.js", &restored).report.rotation,
        Some(truth.rotation)
    );
}

#[test]
fn model_rejects_terms_outside_the_table() {
    let (src, _) = generate(&ForgeManifest::sample(3, ForgeVariant::Checksum)).unwrap();
    let analysis = analyze(&src).unwrap();
    let short = StringTable::new(analysis.model.table.entries[..1].to_vec());
    let err = CanaryModel::new(
        analysis.iife.clone(),
        "d",
        analysis.model.base,
        short,
        CanaryVariant::Checksum {
            expr: ChecksumExpr::Term(analysis.model.base + 5),
            target: 1.0,
        },
    );
    assert!(matches!(err, Err(CanaryError::IndexOutOfRange { .. })));
}
