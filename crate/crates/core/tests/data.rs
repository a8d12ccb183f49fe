use std::collections::{BTreeMap, BTreeSet};

use aft_core::data::{
    answer_histogram, balance_filter, build_corpus, counterfactual_success, generate_episode, generate_qa, oracle_answer,
    stratified_split, CorpusConfig, EpisodeConfig, Outcome, QARecord, Question, SportSpec, Team, TemplateKind, TemplateSet,
};
use aft_core::model::random_baseline;
use aft_core::rng;
use proptest::prelude::*;

const KINDS: [TemplateKind; 4] = [TemplateKind::Effect, TemplateKind::Why, TemplateKind::HowFail, TemplateKind::SameTeamNeighbour];
const ACTIONS: [&str; 3] = ["spike", "serve", "block"];
const ANSWERS: [&str; 5] = ["a", "b", "c", "d", "e"];

/// Records over a handful of meta-questions: `(kind, action, ordinal, answer, episode)`.
fn records() -> impl Strategy<Value = Vec<QARecord>> {
    prop::collection::vec((0..KINDS.len(), 0..ACTIONS.len(), 1usize..4, 0..ANSWERS.len(), 0u64..40), 0..300).prop_map(|spec| {
        spec.into_iter()
            .enumerate()
            .map(|(i, (k, a, ord, ans, ep))| {
                let mut q = Question::new(KINDS[k]).team(Team::Left).ordinal(ord).action(ACTIONS[a]);
                if KINDS[k] == TemplateKind::SameTeamNeighbour {
                    q = q.relation(aft_core::data::Relation::After);
                }
                let sport = if ep % 2 == 0 { "volleyball" } else { "basketball" };
                QARecord::new(i as u64, ep, sport, q, ANSWERS[ans].into()).unwrap()
            })
            .collect()
    })
}

fn low_noise_config(noise: f64) -> EpisodeConfig {
    EpisodeConfig {
        frames: 60,
        noise,
        ..EpisodeConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn balanced_groups_have_no_dominant_answer(recs in records(), seed in any::<u64>()) {
        let input = recs.clone();
        let out = balance_filter(recs, 0.5, seed);
        for (meta, answers) in answer_histogram(&out) {
            let total: usize = answers.values().sum();
            prop_assert!(answers.len() >= 2, "{meta} keeps one answer");
            for (a, c) in &answers {
                prop_assert!(2 * c < total, "{meta}: {a} has {c} of {total}");
            }
        }
        // survivors are a subsequence of the input
        let mut it = input.iter();
        for r in &out {
            prop_assert!(it.any(|x| x == r));
        }
        // already balanced data passes through untouched
        prop_assert_eq!(balance_filter(out.clone(), 0.5, seed ^ 1), out);
    }

    #[test]
    fn balancing_leaves_compliant_groups_alone(recs in records(), seed in any::<u64>()) {
        let before = answer_histogram(&recs);
        let after = answer_histogram(&balance_filter(recs, 0.5, seed));
        for (meta, orig) in &before {
            let total: usize = orig.values().sum();
            let compliant = orig.len() >= 2 && orig.values().all(|c| 2 * c < total);
            match after.get(meta) {
                Some(kept) if compliant => prop_assert_eq!(kept, orig),
                Some(kept) => {
                    for (a, c) in kept {
                        prop_assert!(*c <= orig[a]);
                    }
                }
                None => prop_assert!(!compliant),
            }
        }
    }

    #[test]
    fn stratified_split_never_leaks_episodes(recs in records(), seed in any::<u64>()) {
        let split = stratified_split(&recs, [0.6, 0.2, 0.2], seed).unwrap();
        let sets: Vec<BTreeSet<u64>> = [&split.train, &split.val, &split.test].iter().map(|s| s.iter().copied().collect()).collect();
        for a in 0..3 {
            for b in a + 1..3 {
                prop_assert!(sets[a].is_disjoint(&sets[b]));
            }
        }
        let parts = split.assign(&recs);
        prop_assert_eq!(parts.iter().map(Vec::len).sum::<usize>(), recs.len());
        for (s, part) in parts.iter().enumerate() {
            for r in part {
                prop_assert!(sets[s].contains(&r.episode_id));
            }
        }
    }

    #[test]
    fn episodes_are_well_formed(seed in any::<u64>(), sport in 0usize..3) {
        let spec = &SportSpec::defaults()[sport];
        let cfg = low_noise_config(0.1);
        let ep = generate_episode(&cfg, spec, 7, seed).unwrap();
        ep.log.validate().unwrap();
        prop_assert_eq!(ep.appearance.shape(), &[cfg.frames, cfg.d_appearance]);
        prop_assert_eq!(ep.motion.shape(), &[cfg.frames, cfg.d_motion]);
        for w in ep.log.events.windows(2) {
            prop_assert!(w[0].end_frame < w[1].start_frame);
        }
        for e in &ep.log.events {
            prop_assert!(e.end_frame < cfg.frames);
            prop_assert_eq!(e.outcome == Outcome::None, spec.rules.is_empty());
        }
    }

    #[test]
    fn counterfactuals_are_sound(seed in any::<u64>(), sport in 0usize..2) {
        let spec = &SportSpec::defaults()[sport];
        let ep = generate_episode(&low_noise_config(0.1), spec, 0, seed).unwrap();
        for (i, e) in ep.log.events.iter().enumerate() {
            for removed in &spec.actions {
                let cf = counterfactual_success(&ep.log, spec, i, removed).unwrap();
                if e.fault.is_some() {
                    // an intrinsic fault survives any deletion
                    prop_assert!(!cf);
                } else if e.outcome == Outcome::Success {
                    // deleting events cannot create a counter-action
                    prop_assert!(cf);
                }
                let countered = e.effect_link.is_some() && e.outcome == Outcome::Failure
                    && spec.rule_for(&e.action).is_some_and(|r| Some(&r.reason) == e.outcome_reason.as_ref());
                if countered && e.fault.is_none() && spec.rule_for(&e.action).is_some_and(|r| &r.counter == removed) {
                    prop_assert!(cf);
                }
            }
        }
    }

    #[test]
    fn generated_answers_agree_with_the_oracle_after_reparsing(seed in any::<u64>(), sport in 0usize..3) {
        let spec = &SportSpec::defaults()[sport];
        let ep = generate_episode(&low_noise_config(0.1), spec, 0, seed).unwrap();
        for r in generate_qa(&ep.log, spec, &TemplateSet::all()).unwrap() {
            let again = QARecord::from_parts(r.id, r.episode_id, &r.text, &r.sport, &r.answer).unwrap();
            prop_assert_eq!(&again, &r);
            prop_assert_eq!(oracle_answer(&ep.log, spec, &again.question).unwrap(), Some(r.answer.clone()));
        }
    }
}

/// Counting answers recomputed from the raw event list with no template logic.
#[test]
fn counting_answers_match_a_direct_count() {
    let spec = SportSpec::volleyball();
    for seed in 0..50 {
        let ep = generate_episode(&low_noise_config(0.1), &spec, 0, seed).unwrap();
        for r in generate_qa(&ep.log, &spec, &TemplateSet::of(&[TemplateKind::CountTeamAction])).unwrap() {
            let q = &r.question;
            let direct = ep.log.events.iter().filter(|e| e.team == q.team && Some(&e.action) == q.action.as_ref()).count();
            assert_eq!(r.answer, direct.to_string(), "{}", r.text);
        }
    }
}

#[test]
fn observed_counter_rate_matches_prediction() {
    let cfg = EpisodeConfig {
        frames: 400,
        min_duration: 3,
        max_duration: 6,
        max_gap: 2,
        window: 2,
        ..EpisodeConfig::default()
    };
    for spec in [SportSpec::volleyball(), SportSpec::basketball()] {
        let (mut trials, mut hits) = (0usize, 0usize);
        for seed in 0..300 {
            let ep = generate_episode(&cfg, &spec, 0, seed).unwrap();
            for w in ep.log.events.windows(2) {
                if let Some(rule) = spec.rule_for(&w[0].action) {
                    trials += 1;
                    if w[1].team == w[0].team.other() && w[1].action == rule.counter {
                        hits += 1;
                    }
                }
            }
        }
        let p = cfg.predicted_counter_rate(&spec);
        let observed = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((observed - p).abs() < 4.0 * sigma, "{}: {observed:.4} vs {p:.4} over {trials}", spec.name);
    }
}

#[test]
fn noiseless_idle_frames_are_zero() {
    for seed in 0..20 {
        let ep = generate_episode(&low_noise_config(0.0), &SportSpec::basketball(), 0, seed).unwrap();
        let active = |f: usize| ep.log.events.iter().any(|e| e.is_active(f));
        for f in 0..ep.log.frames {
            let row = ep.appearance.row(f);
            assert_eq!(row.iter().all(|&x| x == 0.0), !active(f), "frame {f}");
            if f > 0 && ep.appearance.row(f - 1) == row {
                assert!(ep.motion.row(f).iter().all(|&x| x == 0.0));
            }
        }
        assert!(ep.motion.row(0).iter().all(|&x| x == 0.0));
    }
}

#[test]
fn corpus_generation_is_deterministic() {
    let cfg = CorpusConfig {
        episodes_per_sport: 20,
        min_answer_count: 5,
        ..CorpusConfig::default()
    };
    let (a, b) = (build_corpus(&cfg).unwrap(), build_corpus(&cfg).unwrap());
    assert_eq!(a.records, b.records);
    assert_eq!(a.split, b.split);
    assert_eq!(a.episodes, b.episodes);
    let other = build_corpus(&CorpusConfig { seed: 1, ..cfg }).unwrap();
    assert_ne!(a.records, other.records);
}

#[test]
fn corpus_records_carry_pool_answers_and_split_episodes() {
    let cfg = CorpusConfig {
        episodes_per_sport: 30,
        min_answer_count: 10,
        ..CorpusConfig::default()
    };
    let c = build_corpus(&cfg).unwrap();
    let mut per_answer: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, r) in c.records.iter().enumerate() {
        assert_eq!(r.id, i as u64);
        assert!(c.split.subset_of(r.episode_id).is_some());
        *per_answer.entry(&r.answer).or_default() += 1;
    }
    for (label, &count) in c.pool.labels().iter().zip(c.pool.counts()) {
        assert_eq!(per_answer[label.as_str()], count);
        assert!(count >= 10);
    }
    assert_eq!(per_answer.len(), c.pool.len());
}

#[test]
fn random_baseline_is_uniform() {
    let classes = 12;
    let draws = 120_000;
    let mut r = rng::seeded(8);
    let mut counts = vec![0usize; classes];
    for _ in 0..draws {
        counts[random_baseline(classes, &mut r)] += 1;
    }
    let e = draws as f64 / classes as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 11 degrees of freedom; the 0.999 quantile is 31.3
    assert!(chi2 < 31.3, "chi2 {chi2:.1}: {counts:?}");
    assert_eq!(random_baseline(1, &mut r), 0);
}
