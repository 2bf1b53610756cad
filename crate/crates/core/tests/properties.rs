mod common;

use std::collections::BTreeMap;

use common::{random_corpus, rng, tally, Tally};
use proptest::prelude::*;
use semshift::change::cosine_distance;
use semshift::corpus::{assign_random_bins, build_vocab, shuffle_control, PreprocessConfig};
use semshift::evaluate::{classify_peak, peak_position, score, welch_t_test, Label, WordClass};
use semshift::pairgen::{extract_pairs, ExtractionConfig, ExtractionMode, PairStream, TargetSet, TemporalTagger};
use semshift::ppmi::{count_matrix, ppmi_weight, PpmiConfig, SparseMatrix};
use semshift::procrustes::orthogonal_map;
use semshift::sgns::{pair_gradient, pair_objective, NegativeSampler};
use semshift::simulate::InjectionSchedule;

fn stream_tally(s: &PairStream) -> Tally {
    s.iter().map(|(w, c, n)| ((w.to_string(), c.to_string()), n)).collect()
}

fn sorted_sentences(c: &semshift::corpus::Corpus) -> Vec<Vec<String>> {
    let mut v: Vec<Vec<String>> = c.sentences().iter().map(|s| s.tokens.clone()).collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alignment_streams_match_direct_window_counts(seed in any::<u64>(), window in 1usize..4, min_count in 1u64..4) {
        let corpus = random_corpus(&mut rng(seed), 3, 40, 20);
        let vocab = build_vocab(&corpus, &PreprocessConfig { min_count, ..Default::default() });
        let targets = TargetSet::all_valid(&vocab);
        let cfg = ExtractionConfig { window, mode: ExtractionMode::Alignment, window_before_deletion: false };
        let streams = extract_pairs(&corpus, &vocab, &targets, &cfg).unwrap();
        prop_assert_eq!(streams.len(), 3);
        for (b, s) in streams.iter().enumerate() {
            prop_assert_eq!(stream_tally(s), tally(&corpus, Some(b), window, |t| vocab.is_valid(t)));
        }
    }

    #[test]
    fn temporal_referencing_only_tags_word_slots(seed in any::<u64>(), window in 1usize..4, pick in 0usize..5) {
        let corpus = random_corpus(&mut rng(seed), 4, 40, 16);
        let vocab = build_vocab(&corpus, &PreprocessConfig { min_count: 2, ..Default::default() });
        let valid: Vec<&str> = vocab.valid_tokens().collect();
        prop_assume!(!valid.is_empty());
        let targets = TargetSet::new(valid.iter().step_by(pick + 1).copied(), &vocab).unwrap();
        let tagger = TemporalTagger::new(&vocab, &targets, &corpus.labels());
        let tr = ExtractionConfig { window, mode: ExtractionMode::TemporalReferencing, window_before_deletion: false };
        let al = ExtractionConfig { mode: ExtractionMode::Alignment, ..tr.clone() };
        let tr_streams = extract_pairs(&corpus, &vocab, &targets, &tr).unwrap();
        prop_assert_eq!(tr_streams.len(), 1);

        let mut detagged = Tally::new();
        for (w, c, n) in tr_streams[0].iter() {
            prop_assert!(tagger.parse(c).is_none(), "tagged context {}", c);
            prop_assert!(vocab.is_valid(c));
            match tagger.parse(w) {
                Some((base, _)) => prop_assert!(targets.contains(base)),
                None => prop_assert!(!targets.contains(w)),
            }
            *detagged.entry((tagger.base(w).to_string(), c.to_string())).or_default() += n;
        }
        let mut pooled = Tally::new();
        for s in extract_pairs(&corpus, &vocab, &targets, &al).unwrap() {
            for (k, n) in stream_tally(&s) {
                *pooled.entry(k).or_default() += n;
            }
        }
        prop_assert_eq!(detagged, pooled);
    }

    #[test]
    fn ppmi_cells_are_finite_and_positive(seed in any::<u64>(), alpha in 0.3f64..=1.0, k in 1.0f64..10.0) {
        let corpus = random_corpus(&mut rng(seed), 2, 30, 12);
        let vocab = build_vocab(&corpus, &PreprocessConfig { min_count: 1, ..Default::default() });
        let targets = TargetSet::all_valid(&vocab);
        let s = &extract_pairs(&corpus, &vocab, &targets, &ExtractionConfig::default()).unwrap()[0];
        prop_assume!(!s.is_empty());
        let counts = count_matrix(s).unwrap();
        let m = ppmi_weight(&counts, &PpmiConfig { cds_alpha: alpha, shift_k: k }).unwrap();
        prop_assert_eq!(m.row_names(), counts.row_names());
        prop_assert_eq!(m.col_names(), counts.col_names());
        for (r, c, v) in m.triplets() {
            prop_assert!(v.is_finite() && v > 0.0);
            prop_assert!(counts.get(r, c) > 0.0);
        }
    }

    #[test]
    fn sparse_matrix_files_round_trip(cells in prop::collection::vec((0usize..6, 0usize..6, 0.0f64..5.0), 0..25)) {
        let m = SparseMatrix::from_triplets(cells.iter().map(|&(r, c, v)| (format!("r{r}"), format!("c{c}"), v)));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.tsv");
        m.write(&p).unwrap();
        let back = SparseMatrix::read(&p).unwrap();
        prop_assert_eq!(back.row_names(), m.row_names());
        prop_assert_eq!(back.col_names(), m.col_names());
        for (r, c, v) in m.triplets() {
            prop_assert!((back.get(r, c) - v).abs() <= 1e-11 * v.max(1.0));
        }
    }

    #[test]
    fn shuffling_keeps_bin_sizes_and_sentences(seed in any::<u64>(), s2 in any::<u64>()) {
        let corpus = random_corpus(&mut rng(seed), 5, 60, 10);
        let shuffled = shuffle_control(&corpus, s2).unwrap();
        prop_assert_eq!(shuffled.bin_sizes(), corpus.bin_sizes());
        prop_assert_eq!(shuffled.labels(), corpus.labels());
        prop_assert_eq!(sorted_sentences(&shuffled), sorted_sentences(&corpus));

        let rebinned = assign_random_bins(&corpus, 3, s2).unwrap();
        let sizes = rebinned.bin_sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), corpus.len());
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(sorted_sentences(&rebinned), sorted_sentences(&corpus));
    }

    #[test]
    fn cosine_distance_is_bounded_symmetric_and_scale_free(
        u in prop::collection::vec(-5.0f64..5.0, 6),
        v in prop::collection::vec(-5.0f64..5.0, 6),
        a in 0.01f64..100.0,
    ) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
        let d = cosine_distance(&u, &v).unwrap();
        prop_assert!((0.0..=2.0).contains(&d));
        prop_assert!((d - cosine_distance(&v, &u).unwrap()).abs() < 1e-12);
        let scaled: Vec<f64> = u.iter().map(|x| x * a).collect();
        prop_assert!((d - cosine_distance(&scaled, &v).unwrap()).abs() < 1e-9);
        prop_assert!(cosine_distance(&u, &u).unwrap() < 1e-12);
    }

    #[test]
    fn procrustes_map_is_orthogonal_and_optimal(seed in any::<u64>(), d in 2usize..8) {
        let mut r = rng(seed);
        let a = common::gaussian(d + 5, d, &mut r);
        let b = common::gaussian(d + 5, d, &mut r);
        let w = orthogonal_map(&a, &b).unwrap();
        prop_assert!((&w * w.transpose() - nalgebra::DMatrix::identity(d, d)).norm() < 1e-9);
        let best = (&b * &w - &a).norm_squared();
        for _ in 0..5 {
            let q = common::random_orthogonal(d, &mut r);
            prop_assert!(best <= (&b * &q - &a).norm_squared() + 1e-9);
        }
    }

    #[test]
    fn sgns_gradient_matches_objective(seed in any::<u64>(), d in 1usize..12, k in 0usize..6) {
        let mut r = rng(seed);
        let vec = |r: &mut rand_chacha::ChaCha8Rng| common::gaussian(1, d, r).iter().map(|x| 0.7 * x).collect::<Vec<f64>>();
        let w = vec(&mut r);
        let p = vec(&mut r);
        let negs: Vec<Vec<f64>> = (0..k).map(|_| vec(&mut r)).collect();
        let neg_refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
        prop_assert!((pair_objective(&w, &p, &neg_refs) - common::objective_reference(&w, &p, &negs)).abs() < 1e-12);
        let g = pair_gradient(&w, &p, &neg_refs);
        let num = common::numeric_gradient(&w, 1e-5, |x| common::objective_reference(x, &p, &negs));
        prop_assert!(common::rel_error(&g.word, &num) < 1e-6);
        let num = common::numeric_gradient(&p, 1e-5, |x| common::objective_reference(&w, x, &negs));
        prop_assert!(common::rel_error(&g.positive, &num) < 1e-6);
    }

    #[test]
    fn sampler_probabilities_follow_smoothed_counts(counts in prop::collection::vec(1u64..1000, 1..20), alpha in 0.1f64..=1.0) {
        let s = NegativeSampler::from_counts(&counts, alpha, 3).unwrap();
        let z: f64 = counts.iter().map(|&c| (c as f64).powf(alpha)).sum();
        let mut total = 0.0;
        for (i, &c) in counts.iter().enumerate() {
            prop_assert!((s.probability(i) - (c as f64).powf(alpha) / z).abs() < 1e-12);
            total += s.probability(i);
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn schedule_quotas_are_monotone(mut ratios in prop::collection::vec(0.0f64..=1.0, 1..8), base in 0.0f64..500.0) {
        ratios.sort_by(f64::total_cmp);
        ratios.insert(0, 0.0);
        let s = InjectionSchedule::new(ratios.clone()).unwrap();
        let q = s.quotas(base);
        prop_assert_eq!(q[0], 0);
        prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
        for (r, n) in ratios.iter().zip(&q) {
            prop_assert!((*n as f64 - r * base).abs() <= 0.5 + 1e-9);
        }
        for step in s.gold_steps() {
            prop_assert!(ratios[step] > ratios[step - 1]);
        }
    }

    #[test]
    fn peaks_land_in_range(series in prop::collection::vec(0.0f64..2.0, 1..10)) {
        let p = peak_position(&series);
        prop_assert!((1..=series.len()).contains(&p));
        prop_assert!(series.iter().all(|&x| x <= series[p - 1]));
        prop_assert!(series[..p - 1].iter().all(|&x| x < series[p - 1]));
        let label = classify_peak(p, series.len());
        prop_assert_eq!(label == Label::Changed, p > 1 && p < series.len());
    }

    #[test]
    fn scores_are_consistent(items in prop::collection::vec((0usize..3, any::<bool>()), 1..60)) {
        let items: Vec<(WordClass, Label)> = items
            .into_iter()
            .map(|(c, changed)| (WordClass::ALL[c], if changed { Label::Changed } else { Label::Stable }))
            .collect();
        let r = score(&items).unwrap();
        prop_assert_eq!(r.total(), items.len());
        prop_assert_eq!(r.true_positive + r.false_positive + r.false_negative + r.true_negative, items.len());
        let correct: usize = r.per_class.iter().map(|c| c.correct).sum();
        prop_assert!((r.mean_word_weighted - correct as f64 / items.len() as f64).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.f1));
        let mut by_class: BTreeMap<WordClass, usize> = BTreeMap::new();
        for (c, _) in &items {
            *by_class.entry(*c).or_default() += 1;
        }
        prop_assert_eq!(r.per_class.len(), by_class.len());
    }

    #[test]
    fn welch_is_antisymmetric(
        a in prop::collection::vec(-10.0f64..10.0, 2..20),
        b in prop::collection::vec(-10.0f64..10.0, 2..20),
    ) {
        let (Ok(x), Ok(y)) = (welch_t_test(&a, &b), welch_t_test(&b, &a)) else { return Ok(()) };
        prop_assert!((x.t + y.t).abs() < 1e-9 * x.t.abs().max(1.0));
        prop_assert!((x.p - y.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&x.p));
        prop_assert!(x.df >= (a.len().min(b.len()) - 1) as f64 - 1e-9);
        prop_assert!(x.df <= (a.len() + b.len() - 2) as f64 + 1e-9);
    }
}
