//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use prro::encoding::{encode_row, parse_sentence, ParsePolicy};
use prro::evaluation::{
    auc_mann_whitney, degenerate_positive_fix, discount_rate, evaluate_scenarios, logistic_objective, metrics,
    metrics_from_scores, train_classifier, utility, ClassifierConfig, ClassifierKind, DiscountComparison,
    EvalConfig, Matrix, MetricReport, Scenario,
};
use prro::generator::{fit_chain, leakage_check, ChainConfig, DEFAULT_MARGIN};
use prro::pipeline::{run_pipeline, PipelineConfig};
use prro::pruning::{prune_signal, spearman_rowcorr, PruningConfig};
use prro::reordering::{
    inverse_reorder, reorder_by_importance, reorder_predictor_first, reorder_predictor_last, ImportanceConfig,
};
use prro::table::{positive_rate, split, Cell, ColumnSchema, Dataset, Schema, SplitRatios};
use rand::seq::SliceRandom;
use rand::Rng;

use common::{fuzz_dataset, random_number, rng, FuzzSpec};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn within_time(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

/// Rank of each value as (count below) + (ties + 1) / 2, by direct counting.
fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let below = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut r = rng(101);
    let mut max_err: f64 = 0.0;
    let mut undefined = 0;
    for case in 0..500 {
        let n = r.gen_range(2..=50);
        let pool = r.gen_range(2..=n.max(2) + 3);
        let tie_heavy = case % 3 == 0;
        let draw = |r: &mut rand_chacha::ChaCha8Rng| {
            if tie_heavy { r.gen_range(0..pool) as f64 } else { r.gen_range(-100.0..100.0) }
        };
        let a: Vec<f64> = (0..n).map(|_| draw(&mut r)).collect();
        let mut b: Vec<f64> = (0..n).map(|_| draw(&mut r)).collect();
        if case % 7 == 0 {
            // inject duplicates of existing values
            for _ in 0..n / 2 {
                let (i, j) = (r.gen_range(0..n), r.gen_range(0..n));
                b[i] = b[j];
            }
        }
        let expected = pearson(&brute_ranks(&a), &brute_ranks(&b));
        let got = spearman_rowcorr(&a, &b).map_err(|e| e.to_string())?;
        match (expected, got) {
            (None, None) => undefined += 1,
            (Some(e), Some(g)) => {
                max_err = max_err.max((e - g).abs());
                ensure((e - g).abs() <= 1e-9, || format!("case {case}: expected {e}, got {g}"))?;
            }
            (e, g) => return Err(format!("case {case}: expected {e:?}, got {g:?}")),
        }
    }
    within_time(start.elapsed(), 5.0)?;
    Ok(format!("500 pairs, max |err| {max_err:.2e}, {undefined} constant-vector cases"))
}

fn row_key(ds: &Dataset, row: &[Cell]) -> String {
    row.iter()
        .enumerate()
        .map(|(j, c)| match c {
            Cell::Num(v) => format!("{:x}", v.to_bits()),
            _ => ds.render_cell(j, c),
        })
        .collect::<Vec<_>>()
        .join("\u{1f}")
}

fn multiset(ds: &Dataset) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for row in ds.rows() {
        *m.entry(row_key(ds, row)).or_insert(0) += 1;
    }
    m
}

fn is_sub_multiset(small: &BTreeMap<String, usize>, big: &BTreeMap<String, usize>) -> bool {
    small.iter().all(|(k, c)| big.get(k).is_some_and(|b| b >= c))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut r = rng(202);
    let spec = FuzzSpec {
        min_features: 2,
        max_features: 6,
        rows: 2..=40,
        wild_names: false,
        missing_rate: 0.1,
    };
    let mut pruned_any = 0;
    for case in 0..500 {
        let ds = fuzz_dataset(&mut r, &spec);
        let tau_lo = r.gen_range(-0.9..0.8);
        let tau_hi = r.gen_range(tau_lo..0.95);
        let cfg = PruningConfig::new(ds.schema(), tau_lo, "1");
        let (out, _) = prune_signal(&ds, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let input = multiset(&ds);
        let output = multiset(&out);
        let interest: Vec<usize> = ds.rows_with_label("1").unwrap();
        let interest_out = out.rows_with_label("1").unwrap();
        ensure(interest_out.len() == interest.len(), || format!("case {case}: (a) interest rows lost"))?;
        let interest_in = multiset(&ds.select(&interest));
        ensure(is_sub_multiset(&interest_in, &output), || format!("case {case}: (a) interest row altered"))?;
        ensure(is_sub_multiset(&output, &input), || format!("case {case}: (b) output not a subset"))?;
        let (again, _) = prune_signal(&out, &cfg).map_err(|e| e.to_string())?;
        ensure(again == out, || format!("case {case}: (c) not idempotent"))?;
        let cfg_hi = PruningConfig::new(ds.schema(), tau_hi, "1");
        let (out_hi, _) = prune_signal(&ds, &cfg_hi).map_err(|e| e.to_string())?;
        ensure(is_sub_multiset(&multiset(&out_hi), &output), || {
            format!("case {case}: (d) tau {tau_hi} kept rows that tau {tau_lo} dropped")
        })?;
        if out.n_rows() < ds.n_rows() {
            pruned_any += 1;
            let before = positive_rate(&ds, "1").unwrap().value();
            let after = positive_rate(&out, "1").unwrap().value();
            ensure(after >= before, || format!("case {case}: (e) rate fell {before} -> {after}"))?;
        }
    }
    within_time(start.elapsed(), 30.0)?;
    Ok(format!("500 datasets, {pruned_any} with rows pruned"))
}

/// Reference escaping, written independently of the codec.
fn esc(text: &str) -> String {
    let mut out = String::new();
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            ',' => out.push_str("\\,"),
            ':' => out.push_str("\\:"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn reference_segments(schema: &Schema, row: &[Cell]) -> Vec<String> {
    (0..schema.len())
        .map(|j| {
            let col = schema.column(j);
            let value = match row[j] {
                Cell::Missing => String::new(),
                Cell::Num(v) => format!("{v}"),
                Cell::Cat(c) => esc(&col.categories[c as usize]),
            };
            format!("{}: {}", esc(&col.name), value)
        })
        .collect()
}

fn same_row(a: &[Cell], b: &[Cell]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| match (x, y) {
            (Cell::Num(p), Cell::Num(q)) => p.to_bits() == q.to_bits(),
            _ => x == y,
        })
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let mut r = rng(303);
    let policy = ParsePolicy::default();
    let spec = FuzzSpec {
        min_features: 1,
        max_features: 7,
        rows: 100..=100,
        wild_names: true,
        missing_rate: 0.1,
    };
    let mut total = 0;
    let mut with_separators = 0;
    for case in 0..100 {
        let ds = fuzz_dataset(&mut r, &spec);
        let schema = ds.schema();
        for (i, row) in ds.rows().iter().enumerate() {
            total += 1;
            let mut segs = reference_segments(schema, row);
            let canonical = segs.join(", ");
            if canonical.contains("\\,") || canonical.contains("\\:") {
                with_separators += 1;
            }
            let encoded = encode_row(row, schema);
            ensure(encoded.text == canonical, || {
                format!("schema {case} row {i}: encoded {:?}, expected {canonical:?}", encoded.text)
            })?;
            let back = parse_sentence(&encoded.text, schema, &policy)
                .map_err(|e| format!("schema {case} row {i}: {e:?}"))?;
            ensure(same_row(&back, row), || format!("schema {case} row {i}: round trip differs"))?;
            segs.shuffle(&mut r);
            let permuted = segs.join(", ");
            let back = parse_sentence(&permuted, schema, &policy)
                .map_err(|e| format!("schema {case} row {i} permuted: {e:?}"))?;
            ensure(same_row(&back, row), || format!("schema {case} row {i}: permuted parse differs"))?;
        }
    }
    within_time(start.elapsed(), 10.0)?;
    Ok(format!("{total} rows, {with_separators} containing escaped separators"))
}

fn criterion_4() -> Check {
    let mut r = rng(404);
    let spec = FuzzSpec {
        min_features: 1,
        max_features: 6,
        rows: 8..=30,
        wild_names: false,
        missing_rate: 0.05,
    };
    let importance = ImportanceConfig::default();
    for case in 0..1000u64 {
        let ds = fuzz_dataset(&mut r, &spec);
        let (last, p_last) = reorder_predictor_last(&ds);
        let (first, p_first) = reorder_predictor_first(&ds);
        ensure(last.schema().label_index() == last.schema().len() - 1, || format!("case {case}: label not last"))?;
        ensure(first.schema().label_index() == 0, || format!("case {case}: label not first"))?;
        for (name, d, p) in [("last", &last, &p_last), ("first", &first, &p_first)] {
            let back = inverse_reorder(d, p).map_err(|e| e.to_string())?;
            ensure(back == ds, || format!("case {case}: inverse of predictor_{name} differs"))?;
        }
        let (last2, p2) = reorder_predictor_last(&last);
        ensure(last2 == last && p2.is_identity(), || format!("case {case}: predictor_last not idempotent"))?;
        let (first2, p2) = reorder_predictor_first(&first);
        ensure(first2 == first && p2.is_identity(), || format!("case {case}: predictor_first not idempotent"))?;
        let clf = train_classifier(ClassifierKind::DecisionTree, &ds, "1", &ClassifierConfig::default())
            .map_err(|e| format!("case {case}: {e}"))?;
        let (imp, p_imp, _) =
            reorder_by_importance(&ds, &clf, case, &importance).map_err(|e| format!("case {case}: {e}"))?;
        ensure(imp.schema().label_index() == imp.schema().len() - 1, || {
            format!("case {case}: importance order does not end with the label")
        })?;
        let back = inverse_reorder(&imp, &p_imp).map_err(|e| e.to_string())?;
        ensure(back == ds, || format!("case {case}: inverse of by_importance differs"))?;
    }
    Ok("1000 tables, three modes, idempotence of last/first".into())
}

fn pair_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut credit = 0.0;
    let mut pairs = 0usize;
    for (i, &pi) in positive.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in positive.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                credit += 1.0;
            } else if scores[i] == scores[j] {
                credit += 0.5;
            }
        }
    }
    credit / pairs as f64
}

fn fuzz_scores<R: Rng>(r: &mut R) -> (Vec<f64>, Vec<bool>) {
    let n = r.gen_range(2..=300);
    let levels = r.gen_range(2..=20);
    let coarse = r.gen_bool(0.5);
    let share = r.gen_range(0.05..0.95);
    let mut positive: Vec<bool> = (0..n).map(|_| r.gen_bool(share)).collect();
    positive[0] = true;
    positive[1] = false;
    // coarse scores sit on a dyadic grid so equal levels are exactly equal
    let scores = positive
        .iter()
        .map(|&p| {
            if coarse {
                let level = r.gen_range(0..levels) + if p { 2 } else { 0 };
                level as f64 / 32.0
            } else {
                r.gen::<f64>() * 0.85 + if p { 0.15 } else { 0.0 }
            }
        })
        .collect();
    (scores, positive)
}

fn criterion_5() -> Check {
    let mut r = rng(505);
    let mut tie_sets = 0;
    for case in 0..200 {
        let (scores, positive) = fuzz_scores(&mut r);
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            tie_sets += 1;
        }
        let expected = pair_auc(&scores, &positive);
        let got = auc_mann_whitney(&scores, &positive).ok_or("auc undefined with both classes")?;
        ensure(got == expected, || format!("set {case}: auc {got} != enumeration {expected}"))?;
    }
    for case in 0..50 {
        let (scores, positive) = fuzz_scores(&mut r);
        let a = r.gen_range(0.5..5.0);
        let b = r.gen_range(-3.0..3.0);
        let family = case % 5;
        let f = |s: f64| -> f64 {
            match family {
                0 => a * s + b,
                1 => (a * s).exp(),
                2 => (s + b).powi(3),
                3 => (s + a).ln(),
                _ => (a * s - 1.0).atan(),
            }
        };
        let mapped: Vec<f64> = scores.iter().map(|&s| f(s)).collect();
        // the float map must itself keep the order strict for the check to be meaningful
        let mut pairs: Vec<(f64, f64)> = scores.iter().copied().zip(mapped.iter().copied()).collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let strict = pairs
            .windows(2)
            .all(|w| (w[0].0 == w[1].0) == (w[0].1 == w[1].1) && w[0].1 <= w[1].1);
        ensure(strict, || format!("map {case} (a {a}, b {b}) is not strictly monotone in floating point"))?;
        let before = auc_mann_whitney(&scores, &positive).unwrap();
        let after = auc_mann_whitney(&mapped, &positive).unwrap();
        ensure(before == after, || format!("map {case} (family {family}): auc {before} -> {after}"))?;
    }
    Ok(format!("200 sets ({tie_sets} with ties) exact, 50 monotone maps invariant"))
}

fn check_f1(m: &MetricReport, ctx: &str) -> Result<(), String> {
    if m.f1_defined {
        let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        ensure((m.f1 - h).abs() <= 1e-12, || format!("{ctx}: f1 {} vs harmonic mean {h}", m.f1))
    } else {
        ensure(m.f1 == 0.0 && m.precision + m.recall == 0.0, || format!("{ctx}: undefined f1 not zero"))
    }
}

fn criterion_6() -> Check {
    let mut r = rng(606);
    let mut reports = Vec::new();
    for _ in 0..200 {
        let (scores, positive) = fuzz_scores(&mut r);
        let threshold = r.gen_range(0.0..1.0);
        reports.push(metrics_from_scores(&scores, &positive, threshold).map_err(|e| e.to_string())?);
    }
    for (i, m) in reports.iter().enumerate() {
        check_f1(m, &format!("report {i}"))?;
    }
    let mut scenario_reports = 0;
    for seed in 0..3 {
        let ds = common::rule_fixture(400, 60 + seed);
        let bundle = split(&ds, SplitRatios::DEFAULT, seed, true).map_err(|e| e.to_string())?;
        let model = fit_chain(&bundle.generator_train, &ChainConfig::default()).map_err(|e| e.to_string())?;
        let synth = model.sample(200, seed).map_err(|e| e.to_string())?;
        let report = evaluate_scenarios("rule", &bundle, &synth, &ClassifierKind::ALL, "1", &EvalConfig::default())
            .map_err(|e| e.to_string())?;
        for e in &report.entries {
            let mut all = vec![&e.baseline, &e.appendant.target];
            if let Some(u) = &e.replacement {
                all.push(&u.target);
            }
            for m in all {
                scenario_reports += 1;
                check_f1(m, &format!("scenario {}", e.classifier.as_str()))?;
            }
        }
    }
    for (i, pair) in reports.chunks(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let mut b_same = b.clone();
        b_same.n_validation = a.n_validation;
        for scenario in [Scenario::Replacement, Scenario::Appendant] {
            let zero = utility(a, a, scenario).map_err(|e| e.to_string())?;
            ensure(zero.difference.values().iter().all(|&v| v == 0.0), || format!("pair {i}: utility(m, m) != 0"))?;
            let ab = utility(a, &b_same, scenario).map_err(|e| e.to_string())?;
            let ba = utility(&b_same, a, scenario).map_err(|e| e.to_string())?;
            let anti = ab
                .difference
                .values()
                .iter()
                .zip(ba.difference.values())
                .all(|(x, y)| *x == -y);
            ensure(anti, || format!("pair {i}: utility not antisymmetric"))?;
        }
    }
    let mut worst: f64 = 0.0;
    for point in 0..20 {
        let (n, d) = (r.gen_range(5..40), r.gen_range(1..6));
        let x = Matrix {
            data: (0..n * d).map(|_| r.gen_range(-2.0..2.0)).collect(),
            n_rows: n,
            n_cols: d,
        };
        let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(r.gen_bool(0.4)))).collect();
        let w: Vec<f64> = (0..d).map(|_| r.gen_range(-1.5..1.5)).collect();
        let b = r.gen_range(-1.0..1.0);
        let l2 = if point % 2 == 0 { 0.0 } else { r.gen_range(0.0..0.5) };
        let (_, gw, gb) = logistic_objective(&x, &y, &w, b, l2);
        let h = 1e-6;
        let loss_at = |w: &[f64], b: f64| logistic_objective(&x, &y, w, b, l2).0;
        let mut numeric = Vec::with_capacity(d + 1);
        for k in 0..d {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[k] += h;
            wm[k] -= h;
            numeric.push((loss_at(&wp, b) - loss_at(&wm, b)) / (2.0 * h));
        }
        numeric.push((loss_at(&w, b + h) - loss_at(&w, b - h)) / (2.0 * h));
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        for (k, (a, f)) in analytic.iter().zip(&numeric).enumerate() {
            let scale = a.abs().max(f.abs()).max(1e-3);
            let rel = (a - f).abs() / scale;
            worst = worst.max(rel);
            ensure(rel <= 1e-5, || format!("point {point} coordinate {k}: analytic {a}, numeric {f}"))?;
        }
    }
    Ok(format!(
        "{} reports + {scenario_reports} scenario reports satisfy the F1 identity; gradient max rel err {worst:.1e}",
        reports.len()
    ))
}

fn criterion_7() -> Check {
    let a = discount_rate(0.019521, 0.009515).map_err(|e| e.to_string())? * 100.0;
    let b = discount_rate(0.112912, 0.103754).map_err(|e| e.to_string())? * 100.0;
    ensure((a - 51.26).abs() <= 0.01, || format!("first discount {a:.4}%, expected 51.26%"))?;
    ensure((b - 8.11).abs() <= 0.01, || format!("second discount {b:.4}%, expected 8.11%"))?;
    let c = DiscountComparison::new(0.019521, 0.009515, 0.112912, 0.103754).map_err(|e| e.to_string())?;
    let improvement = c.similarity_improvement * 100.0;
    ensure((improvement - 43.0).abs() <= 2.0, || format!("improvement {improvement:.2} points, expected 43 +- 2"))?;
    Ok(format!("{a:.2}% and {b:.2}%, improvement {improvement:.2} points"))
}

fn criterion_8() -> Check {
    let start = Instant::now();
    let kinds = [ClassifierKind::LogisticRegression, ClassifierKind::DecisionTree];
    let mut wins = [0usize; 2];
    let mut lines = Vec::new();
    for s in 0..10u64 {
        let ds = common::rule_fixture(2000, 800 + s);
        let bundle = split(&ds, SplitRatios::DEFAULT, s, true).map_err(|e| e.to_string())?;
        let dst = &bundle.generator_train;
        let mut f1 = [[0.0; 2]; 2];
        for (m, (arranged, perm)) in [reorder_predictor_last(dst), reorder_predictor_first(dst)].into_iter().enumerate() {
            let model = fit_chain(&arranged, &ChainConfig::default()).map_err(|e| e.to_string())?;
            let synth = model.sample(dst.n_rows(), 9000 + s).map_err(|e| e.to_string())?;
            let synth = inverse_reorder(&synth, &perm).map_err(|e| e.to_string())?;
            let synth = degenerate_positive_fix(&synth, "1", s).map_err(|e| e.to_string())?;
            for (k, kind) in kinds.iter().enumerate() {
                let clf = train_classifier(*kind, &synth, "1", &ClassifierConfig::default())
                    .map_err(|e| format!("seed {s}: {e}"))?;
                f1[k][m] = metrics(&clf, &bundle.validation, 0.5).map_err(|e| e.to_string())?.f1;
            }
        }
        for k in 0..2 {
            if f1[k][0] > f1[k][1] {
                wins[k] += 1;
            }
        }
        lines.push(format!("{:.2}/{:.2}", f1[0][0], f1[0][1]));
    }
    within_time(start.elapsed(), 60.0)?;
    let detail = format!("last beats first: LR {}/10, DT {}/10 (LR F1 last/first {})", wins[0], wins[1], lines.join(" "));
    ensure(wins.iter().all(|&w| w >= 8), || detail.clone())?;
    Ok(detail)
}

fn criterion_9() -> Check {
    const SYNTH_N: usize = 50_000;
    let cfg = ChainConfig::default();
    let mut closer = 0;
    let mut lines = Vec::new();
    for s in 0..10u64 {
        let ds = common::imbalanced_fixture(5000, 0.02, 900 + s);
        let bundle = split(&ds, SplitRatios::DEFAULT, s, true).map_err(|e| e.to_string())?;
        let dst = &bundle.generator_train;
        let (pruned, _) =
            prune_signal(dst, &PruningConfig::new(dst.schema(), 0.3, "1")).map_err(|e| e.to_string())?;
        let rate = |d: &Dataset| positive_rate(d, "1").map(|p| p.value()).map_err(|e| e.to_string());
        let (r0, r1) = (rate(dst)?, rate(&pruned)?);
        ensure(r1 >= 3.0 * r0, || format!("seed {s}: (a) pruned rate {r1:.4} < 3 x {r0:.4}"))?;
        let synth_rate = |d: &Dataset| -> Result<f64, String> {
            let model = fit_chain(d, &cfg).map_err(|e| e.to_string())?;
            rate(&model.sample(SYNTH_N, 7000 + s).map_err(|e| e.to_string())?)
        };
        let before = discount_rate(r0, synth_rate(dst)?).map_err(|e| e.to_string())?;
        let after = discount_rate(r1, synth_rate(&pruned)?).map_err(|e| e.to_string())?;
        if after.abs() < before.abs() {
            closer += 1;
        }
        lines.push(format!("{:+.3}/{:+.3}", before, after));

        let negatives = dst.select(&dst.rows_with_label("0").unwrap());
        let model = fit_chain(&negatives, &ChainConfig { alpha: 1e-12, ..cfg }).map_err(|e| e.to_string())?;
        let zero = model.sample(500, s).map_err(|e| e.to_string())?;
        ensure(positive_rate(&zero, "1").unwrap().positives == 0, || format!("seed {s}: (c) fixture not zero-positive"))?;
        let fixed = degenerate_positive_fix(&zero, "1", s).map_err(|e| e.to_string())?;
        let pos = positive_rate(&fixed, "1").unwrap().positives;
        ensure(pos == 1, || format!("seed {s}: (c) fix left {pos} positives"))?;
        let changed = zero.rows().iter().zip(fixed.rows()).filter(|(a, b)| a != b).count();
        ensure(changed == 1, || format!("seed {s}: (c) fix changed {changed} rows"))?;
    }
    let detail = format!(
        "(a) all seeds >= 3x; (b) |discount| smaller after pruning in {closer}/10 (before/after {}); (c) fix yields one positive",
        lines.join(" ")
    );
    ensure(closer >= 8, || detail.clone())?;
    Ok(detail)
}

fn noise_table(n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let schema = Schema::new(vec![
        ColumnSchema::numeric("a"),
        ColumnSchema::numeric("b"),
        ColumnSchema::categorical("c", ["p", "q", "r"]),
        ColumnSchema::numeric("d"),
        ColumnSchema::categorical("y", ["0", "1"]).as_label(),
    ])
    .unwrap();
    let rows = (0..n)
        .map(|_| {
            vec![
                Cell::Num(r.gen()),
                Cell::Num(r.gen_range(-5.0..5.0)),
                Cell::Cat(r.gen_range(0..3)),
                Cell::Num(random_number(&mut r).clamp(-10.0, 10.0)),
                Cell::Cat(r.gen_range(0..2)),
            ]
        })
        .collect();
    Dataset::new(schema, rows).unwrap()
}

fn criterion_10() -> Check {
    let train = noise_table(2000, 1);
    let holdout = noise_table(2000, 2);
    let copy = leakage_check(&train, &train, &holdout, DEFAULT_MARGIN).map_err(|e| e.to_string())?;
    ensure(copy.flag && copy.frac_closer_to_train == 1.0, || {
        format!("copy: flag {} frac {}", copy.flag, copy.frac_closer_to_train)
    })?;
    let noise = noise_table(2000, 3);
    let fresh = leakage_check(&noise, &train, &holdout, DEFAULT_MARGIN).map_err(|e| e.to_string())?;
    ensure((fresh.frac_closer_to_train - 0.5).abs() <= 0.1, || {
        format!("noise: frac {} outside 0.5 +- 0.1", fresh.frac_closer_to_train)
    })?;
    ensure(!fresh.flag, || "noise: flagged".into())?;
    Ok(format!("copy frac 1.0 flagged; noise frac {:.3} not flagged", fresh.frac_closer_to_train))
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(root, &path, out);
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
            out.insert(rel, std::fs::read(&path).unwrap());
        }
    }
}

fn manifest_without_timings(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
    if let Some(stages) = v.get_mut("stages").and_then(|s| s.as_array_mut()) {
        for s in stages {
            s.as_object_mut().unwrap().remove("millis");
        }
    }
    v
}

fn criterion_11() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ds = common::wide_fixture(10_000, 1100);
    ensure(ds.schema().len() == 21, || "fixture width".into())?;
    let input = common::write_table(dir.path(), "wide", &ds, "yes");
    let mut runs = Vec::new();
    let mut times = Vec::new();
    for run in 0..2 {
        let out = dir.path().join(format!("run{run}"));
        let text = format!(
            "input = {:?}\noutput = {:?}\nseed = 11\n[reordering]\nmode = \"predictor_last\"\n",
            input.to_string_lossy(),
            out.to_string_lossy()
        );
        let cfg = PipelineConfig::from_toml(&text, &[], dir.path()).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let outcome = run_pipeline(&cfg, false).map_err(|e| e.to_string())?;
        times.push(start.elapsed());
        ensure(outcome.primary.synthetic.schema().names() == ds.schema().names(), || {
            "synthetic columns not in input order".into()
        })?;
        let mut files = BTreeMap::new();
        collect_files(&out, &out, &mut files);
        runs.push(files);
    }
    for t in &times {
        within_time(*t, 60.0)?;
    }
    let (a, b) = (&runs[0], &runs[1]);
    ensure(a.keys().eq(b.keys()), || "runs wrote different file sets".into())?;
    for name in ["synthetic.csv", "scenario_report.json", "report.csv", "prune_report.txt", "leakage_report.json"] {
        ensure(a.contains_key(name), || format!("missing {name}"))?;
    }
    for (name, bytes) in a {
        if name == "manifest.json" {
            ensure(manifest_without_timings(bytes) == manifest_without_timings(&b[name]), || {
                "manifests differ beyond timings".into()
            })?;
        } else {
            ensure(*bytes == b[name], || format!("{name} differs between runs"))?;
        }
    }
    Ok(format!(
        "{} files identical; run times {:.2} s and {:.2} s",
        a.len(),
        times[0].as_secs_f64(),
        times[1].as_secs_f64()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("spearman oracle", criterion_1),
        ("pruning laws", criterion_2),
        ("encode/parse round trip", criterion_3),
        ("reorder round trips", criterion_4),
        ("auc oracle", criterion_5),
        ("metric identities", criterion_6),
        ("discount arithmetic", criterion_7),
        ("reordering effect", criterion_8),
        ("imbalance direction", criterion_9),
        ("leakage calibration", criterion_10),
        ("pipeline determinism", criterion_11),
    ];
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if filter.is_some_and(|k| k != n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n:>2} {name}: PASS ({secs:.2} s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({secs:.2} s) {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
