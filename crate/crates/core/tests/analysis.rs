use adjustsat_core::analysis::*;
use adjustsat_core::session::{SatisfactionLabel, TrialResult};
use adjustsat_core::stimulus::{DeMethod, ProdType};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

/// Quantile by brute force: sort by repeated minimum extraction, then
/// weight the two order statistics around position (n - 1) p.
fn oracle_quantile(values: &[f64], p: f64) -> f64 {
    let mut rest = values.to_vec();
    let mut sorted = Vec::new();
    while !rest.is_empty() {
        let mut k = 0;
        for i in 1..rest.len() {
            if rest[i] < rest[k] {
                k = i;
            }
        }
        sorted.push(rest.remove(k));
    }
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    }
}

fn oracle_box(values: &[f64]) -> (f64, f64, f64, f64, f64, Vec<f64>, Vec<f64>) {
    let (q1, med, q3) = (
        oracle_quantile(values, 0.25),
        oracle_quantile(values, 0.5),
        oracle_quantile(values, 0.75),
    );
    let iqr = q3 - q1;
    let inner = |v: f64| v >= q1 - 1.5 * iqr && v <= q3 + 1.5 * iqr;
    let outer = |v: f64| v >= q1 - 3.0 * iqr && v <= q3 + 3.0 * iqr;
    let lo = values.iter().copied().filter(|&v| inner(v)).fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().filter(|&v| inner(v)).fold(f64::NEG_INFINITY, f64::max);
    let mut near: Vec<f64> = values.iter().copied().filter(|&v| !inner(v) && outer(v)).collect();
    let mut far: Vec<f64> = values.iter().copied().filter(|&v| !outer(v)).collect();
    near.sort_by(f64::total_cmp);
    far.sort_by(f64::total_cmp);
    (q1, med, q3, lo, hi, near, far)
}

fn check_against_oracle(values: &[f64]) {
    let s = box_stats(values).unwrap();
    let (q1, med, q3, lo, hi, near, far) = oracle_box(values);
    assert_eq!((s.q1, s.median, s.q3), (q1, med, q3), "{values:?}");
    assert_eq!((s.whisker_lo, s.whisker_hi), (lo, hi), "{values:?}");
    assert_eq!(s.outliers_near, near, "{values:?}");
    assert_eq!(s.outliers_far, far, "{values:?}");
}

#[test]
fn box_examples() {
    let s = box_stats(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!((s.q1, s.median, s.q3, s.iqr), (2.0, 3.0, 4.0, 2.0));
    assert_eq!(s.outlier_count(), 0);
    assert_eq!(s.mean, 3.0);

    let s = box_stats(&[7.0; 4]).unwrap();
    assert_eq!((s.q1, s.median, s.q3, s.iqr), (7.0, 7.0, 7.0, 0.0));
    assert_eq!((s.whisker_lo, s.whisker_hi), (7.0, 7.0));
    assert_eq!(s.outlier_count(), 0);

    let s = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
    assert_eq!((s.q1, s.q3), (2.0, 4.0));
    assert_eq!(s.outliers_far, vec![100.0]);
    assert!(s.outliers_near.is_empty());
    assert_eq!(s.whisker_hi, 4.0);

    // 9 sits 2.5 IQR above q3
    let s = box_stats(&[1.0, 2.0, 3.0, 4.0, 9.0]).unwrap();
    assert_eq!(s.outliers_near, vec![9.0]);

    assert_eq!(box_stats(&[]), Err(AnalysisError::EmptyInput));
}

#[test]
fn box_stats_matches_oracle_on_random_integer_samples() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(1770);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=50);
        let spread = rng.gen_range(1..40);
        let values: Vec<f64> = (0..n)
            .map(|_| {
                // occasional far values to exercise both outlier classes
                let v = rng.gen_range(-spread..=spread) as f64;
                if rng.gen_bool(0.05) {
                    v * 20.0
                } else {
                    v
                }
            })
            .collect();
        check_against_oracle(&values);
    }
}

proptest! {
    #[test]
    fn box_stats_invariants(values in prop::collection::vec(-60.0f64..60.0, 1..60), seed in any::<u64>()) {
        let s = box_stats(&values).unwrap();
        prop_assert!(s.q1 <= s.median && s.median <= s.q3);
        prop_assert_eq!(s.iqr, s.q3 - s.q1);
        let inside = values.iter().filter(|&&v| s.classify(v) == OutlierClass::Inside).count();
        prop_assert_eq!(inside + s.outlier_count(), values.len());
        prop_assert!(values.iter().all(|&v| v >= s.whisker_lo || s.classify(v) != OutlierClass::Inside));
        prop_assert!(s.whisker_lo >= s.q1 - 1.5 * s.iqr && s.whisker_hi <= s.q3 + 1.5 * s.iqr);

        let mut shuffled = values.clone();
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        prop_assert_eq!(box_stats(&shuffled).unwrap(), s);
    }

    #[test]
    fn quantiles_close_to_oracle_on_reals(values in prop::collection::vec(-60.0f64..60.0, 1..50)) {
        let s = box_stats(&values).unwrap();
        for (got, p) in [(s.q1, 0.25), (s.median, 0.5), (s.q3, 0.75)] {
            prop_assert!((got - oracle_quantile(&values, p)).abs() < 1e-12);
        }
    }
}

fn result(pid: &str, label: &str, de: DeMethod, default_ld: f64, offset: f64, sat: u8) -> TrialResult {
    TrialResult {
        participant_id: pid.into(),
        item_number: 1,
        item_id: item_key(label, de),
        item_label: label.into(),
        de_method: de,
        prod_type: if label.starts_with("AR") { ProdType::AR } else { ProdType::WDR },
        chosen_offset: offset,
        chosen_ld: default_ld - offset,
        satisfaction_value: sat,
        satisfaction_label: SatisfactionLabel::for_value(sat),
        valid: sat >= 15,
    }
}

const DEFAULTS: [(&str, f64); 8] = [
    ("WDR1", 11.0),
    ("WDR2", 8.2),
    ("WDR3", 12.1),
    ("WDR4", 13.0),
    ("WDR5", 11.7),
    ("AR1", 4.0),
    ("AR2", 1.0),
    ("AR3", 6.0),
];

#[test]
fn default_ld_mean() {
    let results: Vec<_> = DEFAULTS
        .iter()
        .map(|&(l, d)| result("P01", l, DeMethod::OriginalObjects, d, 0.0, 20))
        .collect();
    let agg = aggregate(&results, Grouping::All);
    let all = agg.group("all").unwrap().stats.as_ref().unwrap();
    assert!((all.chosen_ld.mean - 8.375).abs() < 1e-12);
    assert!((all.chosen_ld.mean - 8.4).abs() <= 0.05);
    let o = agg.overall.unwrap();
    assert!((o.mean_default_ld - 8.4).abs() <= 0.05);
    assert_eq!(o.distinct_items, 8);

    // both variants of every item still count each label once
    let both: Vec<_> = DEFAULTS
        .iter()
        .flat_map(|&(l, d)| {
            [
                result("P01", l, DeMethod::OriginalObjects, d, 3.0, 20),
                result("P01", l, DeMethod::DialogueSeparation, d, -2.0, 20),
            ]
        })
        .collect();
    let o = aggregate(&both, Grouping::All).overall.unwrap();
    assert_eq!(o.distinct_items, 8);
    assert!((o.mean_default_ld - 8.375).abs() < 1e-9);
}

#[test]
fn groupings() {
    let rs = vec![
        result("A", "WDR1", DeMethod::OriginalObjects, 11.0, -3.0, 20),
        result("A", "WDR1", DeMethod::DialogueSeparation, 11.0, -3.0, 20),
        result("B", "AR1", DeMethod::OriginalObjects, 4.0, -3.0, 20),
        result("B", "AR1", DeMethod::DialogueSeparation, 4.0, -3.0, 20),
        result("C", "WDR1", DeMethod::OriginalObjects, 11.0, 1.0, 25),
    ];
    let by_method = aggregate(&rs[..4], Grouping::ByDeMethod);
    let keys: Vec<_> = by_method.groups.iter().map(|g| g.key.as_str()).collect();
    assert_eq!(keys, ["OO", "DS"]);
    assert_eq!(by_method.groups[0].stats, by_method.groups[1].stats);

    assert_eq!(aggregate(&rs, Grouping::ByListener).groups.len(), 3);
    let by_item = aggregate(&rs, Grouping::ByItem);
    let keys: Vec<_> = by_item.groups.iter().map(|g| g.key.as_str()).collect();
    assert_eq!(keys, ["AR1-OO", "AR1-DS", "WDR1-OO", "WDR1-DS"]);
    assert_eq!(by_item.group("WDR1-OO").unwrap().stats.as_ref().unwrap().chosen_ld.n, 2);
    assert!(by_item.overall.is_none());

    let only_oo: Vec<_> = rs.iter().filter(|r| r.de_method == DeMethod::OriginalObjects).cloned().collect();
    let agg = aggregate(&only_oo, Grouping::ByDeMethod);
    assert_eq!(agg.group("DS").unwrap().stats, Err(AnalysisError::EmptyGroup("DS".into())));
    assert!(agg.group("OO").unwrap().stats.is_ok());

    let empty = aggregate(&[], Grouping::All);
    assert!(empty.groups[0].stats.is_err());
    assert!(empty.overall.is_none());
}

#[test]
fn validity_filter_examples() {
    let mut rs: Vec<_> = (0..16)
        .map(|i| result("P01", "WDR1", DeMethod::OriginalObjects, 11.0, 0.0, if i == 3 { 10 } else { 20 }))
        .collect();
    let p = validity_filter(&rs, Some(DEFAULT_MAX_DISCARD_SHARE));
    assert_eq!((p.valid.len(), p.discarded.len()), (15, 1));
    assert!(p.discarded_participants.is_empty());

    for r in rs.iter_mut().take(9) {
        r.valid = false;
    }
    let p = validity_filter(&rs, Some(DEFAULT_MAX_DISCARD_SHARE));
    assert_eq!((p.valid.len(), p.discarded.len()), (0, 16));
    assert_eq!(p.discarded_participants, ["P01"]);
    let p = validity_filter(&rs, None);
    assert_eq!((p.valid.len(), p.discarded.len()), (7, 9));

    assert_eq!(validity_filter(&[], Some(0.5)), Partition::default());
}

proptest! {
    #[test]
    fn validity_filter_partitions(flags in prop::collection::vec((0u8..4, any::<bool>()), 0..60)) {
        let rs: Vec<_> = flags
            .iter()
            .enumerate()
            .map(|(i, &(pid, valid))| {
                let mut r = result(&format!("P{pid}"), "WDR1", DeMethod::OriginalObjects, 11.0, 0.0, 20);
                r.item_number = i as u32;
                r.valid = valid;
                r
            })
            .collect();
        let p = validity_filter(&rs, Some(0.5));
        prop_assert_eq!(p.valid.len() + p.discarded.len(), rs.len());
        let mut seen: Vec<_> = p.valid.iter().chain(&p.discarded).map(|r| r.item_number).collect();
        seen.sort();
        prop_assert_eq!(seen, (0..rs.len() as u32).collect::<Vec<_>>());
        prop_assert!(p.valid.iter().all(|r| r.valid));
    }
}

#[test]
fn audiogram_examples() {
    let a = Audiogram::new("P1", vec![1000.0], vec![30.0], vec![40.0]).unwrap();
    let s = audiogram_summary(&[a]).unwrap();
    assert_eq!((s.mean_better_ear[0], s.lower_envelope[0], s.upper_envelope[0]), (30.0, 30.0, 30.0));

    let f = vec![500.0, 1000.0];
    let a = Audiogram::new("P1", f.clone(), vec![10.0, 50.0], vec![15.0, 20.0]).unwrap();
    let b = Audiogram::new("P2", f.clone(), vec![25.0, 5.0], vec![20.0, 30.0]).unwrap();
    let s = audiogram_summary(&[a.clone(), b]).unwrap();
    assert_eq!(s.mean_better_ear, vec![15.0, 12.5]);
    assert_eq!(s.lower_envelope, vec![10.0, 5.0]);
    assert_eq!(s.upper_envelope, vec![20.0, 20.0]);

    let s = audiogram_summary(&[a.clone(), a.clone(), a.clone()]).unwrap();
    assert_eq!(s.mean_better_ear, s.lower_envelope);
    assert_eq!(s.mean_better_ear, s.upper_envelope);

    let c = Audiogram::new("P3", vec![500.0, 2000.0], vec![0.0; 2], vec![0.0; 2]).unwrap();
    assert_eq!(
        audiogram_summary(&[a, c]),
        Err(AnalysisError::FrequencyMismatch { pid: "P3".into() })
    );
    assert!(Audiogram::new("P4", vec![1000.0, 500.0], vec![0.0; 2], vec![0.0; 2]).is_err());
    assert!(Audiogram::new("P4", vec![500.0], vec![f64::NAN], vec![0.0]).is_err());
    assert_eq!(audiogram_summary(&[]), Err(AnalysisError::EmptyInput));
}

proptest! {
    #[test]
    fn better_ear_mean_never_exceeds_both_ear_mean(
        ears in prop::collection::vec(prop::collection::vec((-10.0f64..90.0, -10.0f64..90.0), 3), 1..12)
    ) {
        let f = vec![500.0, 1000.0, 4000.0];
        let grams: Vec<_> = ears
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Audiogram::new(format!("P{i}"), f.clone(), e.iter().map(|x| x.0).collect(), e.iter().map(|x| x.1).collect()).unwrap()
            })
            .collect();
        let s = audiogram_summary(&grams).unwrap();
        for k in 0..3 {
            let both = ears.iter().map(|e| e[k].0 + e[k].1).sum::<f64>() / (2 * ears.len()) as f64;
            prop_assert!(s.mean_better_ear[k] <= both + 1e-9);
            prop_assert!(s.lower_envelope[k] <= s.mean_better_ear[k] + 1e-9);
            prop_assert!(s.mean_better_ear[k] <= s.upper_envelope[k] + 1e-9);
        }
    }
}

fn response(pid: &str, q0: HearingSelfRating, q5: SpeechProblemFrequency) -> QuestionnaireResponse {
    QuestionnaireResponse {
        participant_id: pid.into(),
        q0,
        q1: String::new(),
        q2: "TV".into(),
        q3: String::new(),
        q4: String::new(),
        q5,
        q6: "speaks, \"fast\"".into(),
    }
}

#[test]
fn questionnaire_examples() {
    use SpeechProblemFrequency::*;
    let answers = [EveryDay, Weekly, Weekly, Monthly, EveryDay, Weekly, Monthly, Monthly, Weekly, Never, Never];
    let rs: Vec<_> = answers
        .iter()
        .enumerate()
        .map(|(i, &a)| response(&format!("P{i}"), HearingSelfRating::Average, a))
        .collect();
    let t = questionnaire_tally(&rs);
    assert_eq!(t.n, 11);
    assert!((t.problem_share.unwrap() - 9.0 / 11.0).abs() < 1e-12);
    let q0_bins: Vec<_> = t.q0.iter().filter(|c| c.count > 0).collect();
    assert_eq!(q0_bins.len(), 1);
    assert_eq!(q0_bins[0].count, 11);
    assert_eq!(t.q5.iter().map(|c| c.count).sum::<usize>(), 11);

    let t = questionnaire_tally(&[]);
    assert_eq!(t.problem_share, None);
    assert!(t.q0.iter().all(|c| c.count == 0));
    assert!(t.q5.iter().all(|c| c.count == 0));
}

proptest! {
    #[test]
    fn tally_conserves_counts(codes in prop::collection::vec((0usize..5, 0usize..4), 0..40)) {
        let rs: Vec<_> = codes
            .iter()
            .map(|&(a, b)| response("P", HearingSelfRating::ALL[a], SpeechProblemFrequency::ALL[b]))
            .collect();
        let t = questionnaire_tally(&rs);
        prop_assert_eq!(t.q0.iter().map(|c| c.count).sum::<usize>(), rs.len());
        prop_assert_eq!(t.q5.iter().map(|c| c.count).sum::<usize>(), rs.len());
    }
}

#[test]
fn plot_geometry() {
    let rs = vec![
        result("A", "WDR1", DeMethod::OriginalObjects, 11.0, 0.0, 20),
        result("B", "WDR1", DeMethod::OriginalObjects, 11.0, -1.0, 20),
        result("C", "WDR1", DeMethod::OriginalObjects, 11.0, -2.0, 20),
        result("D", "WDR1", DeMethod::OriginalObjects, 11.0, -3.0, 20),
        result("E", "WDR1", DeMethod::OriginalObjects, 11.0, -40.0, 20),
    ];
    let agg = aggregate(&rs, Grouping::All);
    let doc = export_plot_data(&agg, None, Layout::LdFigure, &PlotExtras::default());
    assert_eq!(doc.boxes.len(), 1);
    assert!(doc.markers.iter().any(|m| m.class == MarkerClass::Circle && m.y == 51.0));
    let default_line = doc.lines.iter().find(|l| l.role == LineRole::DefaultLd).unwrap();
    assert_eq!((default_line.y0, default_line.y1, default_line.stroke), (11.0, 11.0, Stroke::Dashed));
    assert!(doc.lines.iter().any(|l| l.role == LineRole::Mean && l.color == OO_COLOR));

    let by_item = aggregate(&rs, Grouping::ByItem);
    let extras = PlotExtras { maxima: vec![("WDR1-OO".into(), 51.0)] };
    let doc = export_plot_data(&by_item, Some(&agg), Layout::LdFigure, &extras);
    assert_eq!(doc.boxes[0].color, OO_COLOR);
    assert!(doc.lines.iter().any(|l| l.role == LineRole::Maximum && l.y0 == 51.0));
    assert!(doc.lines.iter().any(|l| l.role == LineRole::DefaultLd));

    let sat = export_plot_data(&agg, None, Layout::SatisfactionFigure, &PlotExtras::default());
    assert_eq!(sat.y_range, [0.0, 30.0]);
    assert_eq!(sat.y_ticks.len(), 7);
    assert!(sat.lines.iter().any(|l| l.role == LineRole::SameAs && l.y0 == 15.0));

    let json: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
    for key in ["boxes", "markers", "lines"] {
        assert!(json[key].is_array(), "{key}");
    }
    assert_eq!(json["markers"][0]["class"], "circle");

    let svg = to_svg(&doc);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<circle").count(), doc.markers.len());
    assert_eq!(to_svg(&doc), svg);
}

#[test]
fn audiogram_and_questionnaire_plots() {
    let f = vec![250.0, 1000.0, 4000.0];
    let a = Audiogram::new("P1", f.clone(), vec![10.0, 20.0, 50.0], vec![15.0, 15.0, 60.0]).unwrap();
    let doc = audiogram_plot(&audiogram_summary(&[a]).unwrap());
    assert!(doc.y_inverted);
    assert_eq!(doc.lines.len(), 6);
    assert_eq!(doc.x_ticks.len(), 3);

    let t = questionnaire_tally(&[response("P1", HearingSelfRating::Good, SpeechProblemFrequency::Never)]);
    let doc = questionnaire_plot(&t);
    assert_eq!(doc.bars.len(), 9);
    assert_eq!(doc.bars.iter().map(|b| b.height).sum::<f64>(), 2.0);
}

#[test]
fn results_csv_round_trip() {
    let rs = vec![
        result("P01", "WDR1", DeMethod::OriginalObjects, 11.0, -3.0, 20),
        result("P01", "AR2", DeMethod::DialogueSeparation, 1.0, 0.8, 10),
    ];
    let mut buf = Vec::new();
    write_results_csv(&mut buf, &rs, true).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "pid,item_number,item_label,de_method,prod_type,chosen_offset_lu,chosen_ld_lu,satisfaction_value,satisfaction_label,valid"
    );
    assert_eq!(text.lines().nth(2).unwrap(), "P01,1,AR2,DS,AR,0.8,0.2,10,Slightly worse,false");
    let back = read_results_csv(&buf[..]).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!(back[0].item_id, "WDR1-OO");
    assert_eq!(back[1].chosen_offset, 0.8);
    assert_eq!(back[1].satisfaction_label, SatisfactionLabel::SlightlyWorse);
    assert!(!back[1].valid);
}

#[test]
fn malformed_results_rows_name_their_lines() {
    let text = "pid,item_number,item_label,de_method,prod_type,chosen_offset_lu,chosen_ld_lu,satisfaction_value,satisfaction_label,valid\n\
                P01,1,WDR1,OO,WDR,0.0,11.0,20,Slightly better,true\n\
                P01,2,WDR1,XX,WDR,0.0,11.0,20,Slightly better,true\n\
                P01,3,WDR1,OO,WDR,zero,11.0,20,Slightly better,true\n\
                P01,4,WDR1\n";
    let Err(CsvError::Rows(errs)) = read_results_csv(text.as_bytes()) else {
        panic!("expected row errors");
    };
    let lines: Vec<u64> = errs.iter().map(|e| e.line).collect();
    assert_eq!(lines, [3, 4, 5]);
    assert!(errs[0].message.contains("de_method"));
    assert!(errs[1].message.contains("chosen_offset_lu"));

    assert!(matches!(read_results_csv("pid,x\n".as_bytes()), Err(CsvError::Header { .. })));
}

#[test]
fn audiogram_and_questionnaire_csv() {
    let text = "pid,frequency_hz,left_dbhl,right_dbhl\nP2,1000,20,25\nP1,1000,10,5\nP2,500,15,10\nP1,500,0,5\n";
    let grams = read_audiograms_csv(text.as_bytes()).unwrap();
    assert_eq!(grams.len(), 2);
    assert_eq!(grams[1].frequencies(), [500.0, 1000.0]);
    assert_eq!(grams[1].right(), [10.0, 25.0]);
    let mut buf = Vec::new();
    write_audiograms_csv(&mut buf, &grams).unwrap();
    assert_eq!(read_audiograms_csv(&buf[..]).unwrap(), grams);

    let dup = "pid,frequency_hz,left_dbhl,right_dbhl\nP1,500,0,0\nP1,500,5,5\n";
    assert!(matches!(read_audiograms_csv(dup.as_bytes()), Err(CsvError::Rows(_))));

    let rs = vec![response("P1", HearingSelfRating::Moderate, SpeechProblemFrequency::Weekly)];
    let mut buf = Vec::new();
    write_questionnaire_csv(&mut buf, &rs).unwrap();
    assert_eq!(read_questionnaire_csv(&buf[..]).unwrap(), rs);
    let by_text = "pid,q0,q1,q2,q3,q4,q5,q6\nP1,Good,,,,,At least once a month,\n";
    let r = read_questionnaire_csv(by_text.as_bytes()).unwrap();
    assert_eq!(r[0].q5, SpeechProblemFrequency::Monthly);
    let bad = "pid,q0,q1,q2,q3,q4,q5,q6\nP1,Great,,,,,never,\n";
    assert!(matches!(read_questionnaire_csv(bad.as_bytes()), Err(CsvError::Rows(e)) if e[0].line == 2));
}
