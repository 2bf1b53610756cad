mod common;

use semshift::change::{change_report, ComparisonMode, ModelOutput, Space};
use semshift::corpus::{build_vocab, Corpus, PreprocessConfig, Provenance, Sentence};
use semshift::evaluate::{diff_percent, score, welch_t_test, Label, WordClass};
use semshift::pairgen::{extract_pairs, ExtractionConfig, TargetSet};
use semshift::ppmi::{count_matrix, ppmi_weight, PpmiConfig};
use semshift::procrustes::{align, DistanceBasis};
use semshift::sgns::DenseSpace;

// Reference values from scipy.stats.ttest_ind(a, b, equal_var=False).
const A13: [f64; 13] = [0.31, 0.42, 0.28, 0.35, 0.51, 0.39, 0.27, 0.44, 0.33, 0.48, 0.30, 0.36, 0.41];
const B19: [f64; 19] = [
    0.22, 0.19, 0.31, 0.25, 0.18, 0.27, 0.21, 0.29, 0.16, 0.24, 0.33, 0.20, 0.23, 0.26, 0.17, 0.28, 0.22, 0.30, 0.19,
];

#[test]
fn welch_matches_reference_values() {
    let r = welch_t_test(&A13, &B19).unwrap();
    assert!((r.t - 5.662501089682826).abs() < 1e-10, "{}", r.t);
    assert!((r.df - 19.04242602651307).abs() < 1e-9, "{}", r.df);
    assert!((r.p - 1.8357136245439454e-05).abs() < 1e-12, "{}", r.p);

    let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0], &[1.5, 2.5, 2.0]).unwrap();
    assert!((r.t - 0.7071067811865476).abs() < 1e-12);
    assert!((r.df - 4.0754716981132075).abs() < 1e-10);
    assert!((r.p - 0.5178382614661361).abs() < 1e-9);
}

#[test]
fn scores_match_hand_counts() {
    use Label::{Changed as C, Stable as S};
    use WordClass::*;
    // 3/4 stable right, 2/3 unrelated right, 1/2 related right.
    let items = [
        (Stable, S),
        (Stable, S),
        (Stable, S),
        (Stable, C),
        (ChangeUnrelated, C),
        (ChangeUnrelated, C),
        (ChangeUnrelated, S),
        (ChangeRelated, C),
        (ChangeRelated, S),
    ];
    let r = score(&items).unwrap();
    assert_eq!(r.accuracy(Stable), Some(0.75));
    assert_eq!(r.accuracy(ChangeUnrelated), Some(2.0 / 3.0));
    assert_eq!(r.accuracy(ChangeRelated), Some(0.5));
    assert_eq!((r.true_positive, r.false_positive, r.false_negative, r.true_negative), (3, 1, 2, 3));
    // precision 3/4, recall 3/5
    assert!((r.f1 - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-12);
    assert!((r.mean_word_weighted - 6.0 / 9.0).abs() < 1e-12);
    assert!((r.mean_class_unweighted - (0.75 + 2.0 / 3.0 + 0.5) / 3.0).abs() < 1e-12);

    let none = score(&[(Stable, S), (ChangeRelated, S)]).unwrap();
    assert_eq!(none.f1, 0.0);
    assert_eq!(none.per_class.len(), 2);
}

#[test]
fn diff_percent_rounds_relative_gap() {
    assert_eq!(diff_percent(0.31, 0.21).unwrap(), 48.0);
    assert_eq!(diff_percent(0.2, 0.2).unwrap(), 0.0);
    assert_eq!(diff_percent(0.1, 0.2).unwrap(), -50.0);
    assert!(diff_percent(0.1, 0.0).is_err());
}

fn sentences(lines: &[(&str, usize)]) -> Vec<Sentence> {
    lines
        .iter()
        .map(|(l, b)| Sentence { tokens: l.split(' ').map(String::from).collect(), bin: *b })
        .collect()
}

#[test]
fn ppmi_of_a_tiny_corpus_by_hand() {
    // One sentence "a b a c", window 1: pairs (a,b) (b,a) (b,a) (a,b) (a,c) (c,a).
    let corpus = Corpus::new(vec!["x".into()], sentences(&[("a b a c", 0)]), Provenance::Genuine).unwrap();
    let vocab = build_vocab(&corpus, &PreprocessConfig { min_count: 1, ..Default::default() });
    let cfg = ExtractionConfig { window: 1, ..Default::default() };
    let s = &extract_pairs(&corpus, &vocab, &TargetSet::all_valid(&vocab), &cfg).unwrap()[0];
    let counts = count_matrix(s).unwrap();
    assert_eq!(counts.get("a", "b"), 2.0);
    assert_eq!(counts.get("b", "a"), 2.0);
    assert_eq!(counts.get("a", "c"), 1.0);
    assert_eq!(counts.get("c", "a"), 1.0);
    // alpha = 1, k = 1: PMI(a, c) = ln(1·6 / (3·1)) = ln 2; PMI(a, b) = ln(2·6 / (3·2)) = ln 2;
    // PMI(b, a) = ln(2·6 / (2·3)) = ln 2; PMI(c, a) = ln(1·6 / (1·3)) = ln 2.
    let m = ppmi_weight(&counts, &PpmiConfig { cds_alpha: 1.0, shift_k: 1.0 }).unwrap();
    for (r, c) in [("a", "b"), ("a", "c"), ("b", "a"), ("c", "a")] {
        assert!((m.get(r, c) - 2f64.ln()).abs() < 1e-15);
    }
    // Shifting by k = 2 removes every cell.
    let m = ppmi_weight(&counts, &PpmiConfig { cds_alpha: 1.0, shift_k: 2.0 }).unwrap();
    assert_eq!(m.nnz(), 0);
    assert_eq!(m.n_rows(), 3);
}

#[test]
fn rotated_copy_has_zero_change() {
    let mut rng = common::rng(11);
    let a = common::gaussian(40, 6, &mut rng);
    let r = common::random_orthogonal(6, &mut rng);
    let b = &a * &r;
    let names: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let space = |m: &nalgebra::DMatrix<f64>| {
        DenseSpace::new(names.clone(), 6, (0..40).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect()).unwrap()
    };
    let res = align(&space(&a), &space(&b)).unwrap();
    assert!((&res.w - r.transpose()).norm() < 1e-9);
    let model = ModelOutput::PerBin {
        spaces: vec![Space::Dense(space(&a)), Space::Dense(space(&b))],
        labels: vec!["1".into(), "2".into()],
    };
    for basis in [DistanceBasis::Centered, DistanceBasis::Uncentered] {
        let rows = change_report(&model, &names, ComparisonMode::Consecutive, basis).unwrap();
        assert!(rows.iter().all(|s| s.values[0].unwrap() < 1e-9));
    }
}

#[test]
fn count_model_sees_a_context_swap() {
    // "bank" moves from river contexts to money contexts; "tree" stays put.
    let mut lines = Vec::new();
    for _ in 0..30 {
        lines.push(("the bank of the river water flows", 0));
        lines.push(("a tree near the river water", 0));
        lines.push(("money in the bank and cash loans", 1));
        lines.push(("a tree near the river water", 1));
        lines.push(("cash and money loans grow", 0));
        lines.push(("the river water flows", 1));
    }
    let corpus = Corpus::new(vec!["a".into(), "b".into()], sentences(&lines), Provenance::Genuine).unwrap();
    let vocab = build_vocab(&corpus, &PreprocessConfig { min_count: 1, ..Default::default() });
    let targets = TargetSet::new(["bank", "tree"], &vocab).unwrap();
    let settings = semshift::experiment::ModelSettings {
        extraction: Default::default(),
        sgns: Default::default(),
        ppmi: PpmiConfig { cds_alpha: 0.75, shift_k: 1.0 },
        basis: DistanceBasis::Centered,
    };
    for kind in [semshift::experiment::ModelKind::PpmiAl, semshift::experiment::ModelKind::PpmiTr] {
        let m = semshift::experiment::train_model(kind, &corpus, &vocab, &targets, &settings, 1).unwrap();
        let rows = change_report(&m, &["bank".into(), "tree".into()], ComparisonMode::Consecutive, DistanceBasis::Centered).unwrap();
        let (bank, tree) = (rows[0].values[0].unwrap(), rows[1].values[0].unwrap());
        assert!(bank > 0.5 && tree < 0.2, "{kind}: bank {bank} tree {tree}");
    }
}
