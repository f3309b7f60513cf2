//! Oracle behaviour on the narrative fixtures: state succession, rule
//! truth, supportedness, full-model checks, and exhaustive enumeration
//! cross-checked against an unpruned brute force.

use std::collections::BTreeSet;

use kelps_forge::ndistant::to_n_distant;
use kelps_forge::oracle::*;
use kelps_forge::parser::parse;
use kelps_forge::syntax::*;
use kelps_forge::validate::check_fluent_event_restriction;

fn fixture(name: &str) -> Framework {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn ga(name: &str) -> GroundAtom {
    GroundAtom::nullary(name)
}

fn ga2(name: &str, args: &[Term]) -> GroundAtom {
    GroundAtom::new(name, args.to_vec())
}

fn budget() -> SearchBudget {
    SearchBudget::default()
}

/// Builds a model structure by running the causal theory forward over
/// the given actions.
fn model_from_acts(f: &Framework, acts: &[(u32, GroundAtom)]) -> ModelStructure {
    let n = f.horizon.expect("n-distant framework");
    let mut m = ModelStructure::new(n, f.initial_state.clone());
    m.ext = f.ext.clone();
    m.aux = f.aux.clone();
    for (t, a) in acts {
        m.acts.entry(*t).or_default().insert(a.clone());
    }
    for t in 1..=n {
        let next = successor_state(m.state(t - 1), &m.events_at(t), &f.causal.post, &f.aux);
        m.states.push(next);
    }
    m
}

/// Unpruned reference enumeration: all subsets of (candidate, timestamp)
/// pairs, filtered by the full model check.
fn enumerate_unpruned(f: &Framework) -> BTreeSet<ModelStructure> {
    let n = f.horizon.unwrap();
    let universe = ground_action_universe(f, &budget()).unwrap();
    let slots: Vec<(u32, GroundAtom)> = (1..=n)
        .flat_map(|t| universe.iter().map(move |a| (t, a.clone())))
        .collect();
    assert!(slots.len() <= 20, "unpruned reference only works on tiny instances");
    let mut out = BTreeSet::new();
    for mask in 0u64..(1 << slots.len()) {
        let acts: Vec<(u32, GroundAtom)> = slots
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, s)| s.clone())
            .collect();
        let m = model_from_acts(f, &acts);
        if is_reactive_model(f, &m, &budget()).unwrap() {
            out.insert(m);
        }
    }
    out
}

#[test]
fn successor_applies_terminates_then_initiates() {
    let f = fixture("evacuation.kelps");
    let s: BTreeSet<_> = [ga("door_locked")].into();
    let ev: BTreeSet<_> = [ga("unlock")].into();
    let next = successor_state(&s, &ev, &f.causal.post, &f.aux);
    assert!(next.is_empty());

    // A fluent both initiated and terminated still holds afterwards.
    let mut causal = CausalTheory::default();
    causal.post.push(PostEntry {
        effect: EffectKind::Initiates,
        event: Template::new("a", vec![]),
        fluent: Template::new("p", vec![]),
        guard: vec![],
    });
    causal.post.push(PostEntry {
        effect: EffectKind::Terminates,
        event: Template::new("b", vec![]),
        fluent: Template::new("p", vec![]),
        guard: vec![],
    });
    let s: BTreeSet<_> = [ga("p")].into();
    let ev: BTreeSet<_> = [ga("a"), ga("b")].into();
    let next = successor_state(&s, &ev, &causal.post, &BTreeSet::new());
    assert!(next.contains(&ga("p")));

    // No events: the state is unchanged.
    let same = successor_state(&s, &BTreeSet::new(), &causal.post, &BTreeSet::new());
    assert_eq!(same, s);
}

#[test]
fn rule_truth_on_the_evacuation_sequence() {
    let f = to_n_distant(&fixture("evacuation.kelps"), 7).unwrap();
    let good = model_from_acts(&f, &[(5, ga("evacuate"))]);
    assert!(evaluate_rule(&f.rules[0], &good, &f, &budget()).unwrap());

    let bad = model_from_acts(&f, &[]);
    assert!(!evaluate_rule(&f.rules[0], &bad, &f, &budget()).unwrap());

    // A rule whose antecedent never fires is vacuously true.
    let vacuous = ReactiveRule::new(
        1,
        vec![Condition::event("meteor", vec![], TimeExpr::var("T"))],
        vec![vec![Condition::event("duck", vec![], TimeExpr::var("T1"))]],
    );
    assert!(evaluate_rule(&vacuous, &bad, &f, &budget()).unwrap());
}

#[test]
fn supportedness_depends_on_the_horizon() {
    // evacuate at 5 after the alarm at 2 is supported.
    let f = to_n_distant(&fixture("evacuation.kelps"), 7).unwrap();
    let m = model_from_acts(&f, &[(5, ga("evacuate"))]);
    assert!(is_supported(&ga("evacuate"), 5, &m, &f, &budget()).unwrap());

    // In the 2-distant chain, a second a1 at 2 leaves no room for a2.
    let toy = fixture("toy2.kelps");
    let f2 = to_n_distant(&toy, 2).unwrap();
    let m2 = model_from_acts(&f2, &[(1, ga("a1")), (2, ga("a2")), (2, ga("a1"))]);
    assert!(!is_supported(&ga("a1"), 2, &m2, &f2, &budget()).unwrap());

    // With a large horizon the same action is supported.
    let f9 = to_n_distant(&toy, 9).unwrap();
    let mut m9 = model_from_acts(&f9, &[(1, ga("a1")), (2, ga("a2")), (2, ga("a1"))]);
    m9.n = 9;
    assert!(is_supported(&ga("a1"), 2, &m9, &f9, &budget()).unwrap());
}

#[test]
fn model_check_reports_reasons() {
    let f = to_n_distant(&fixture("evacuation.kelps"), 7).unwrap();
    let ok = model_from_acts(&f, &[(5, ga("evacuate"))]);
    assert_eq!(check_reactive_model(&f, &ok, &budget()).unwrap(), None);

    // Evacuating while the door is still locked violates C_pre.
    let locked = model_from_acts(&f, &[(3, ga("evacuate"))]);
    assert_eq!(
        check_reactive_model(&f, &locked, &budget()).unwrap(),
        Some(Reason::PreViolated { index: 0 })
    );

    // Never evacuating leaves the rule unsatisfied.
    let lazy = model_from_acts(&f, &[]);
    assert_eq!(
        check_reactive_model(&f, &lazy, &budget()).unwrap(),
        Some(Reason::RuleUnsatisfied { id: 1 })
    );
}

#[test]
fn evacuation_has_exactly_seven_models() {
    let f = to_n_distant(&fixture("evacuation.kelps"), 7).unwrap();
    let models = enumerate_reactive_models(&f, &budget()).unwrap();
    // Brute force agrees: any non-empty subset of evacuate@{5,6,7}.
    assert_eq!(models, enumerate_unpruned(&f));
    assert_eq!(models.len(), 7);
    for m in &models {
        let times: BTreeSet<u32> = m.acts.keys().copied().collect();
        assert!(times.iter().all(|t| [5, 6, 7].contains(t)), "{times:?}");
        assert!(!times.is_empty());
        for acts in m.acts.values() {
            assert_eq!(acts.iter().collect::<Vec<_>>(), vec![&ga("evacuate")]);
        }
    }
}

#[test]
fn empty_framework_has_one_model() {
    let mut f = Framework::default();
    f.initial_state.insert(ga("p"));
    let f = to_n_distant(&f, 3).unwrap();
    let models = enumerate_reactive_models(&f, &budget()).unwrap();
    assert_eq!(models.len(), 1);
    let m = models.iter().next().unwrap();
    assert!(m.acts.is_empty());
    assert!(m.states.iter().all(|s| s.contains(&ga("p"))));
}

#[test]
fn two_distant_chain_has_one_model() {
    let f = to_n_distant(&fixture("toy2.kelps"), 2).unwrap();
    let models = enumerate_reactive_models(&f, &budget()).unwrap();
    assert_eq!(models.len(), 1);
    let m = models.iter().next().unwrap();
    assert_eq!(m.acts_at(1).iter().collect::<Vec<_>>(), vec![&ga("a1")]);
    assert_eq!(m.acts_at(2).iter().collect::<Vec<_>>(), vec![&ga("a2")]);
}

#[test]
fn bookstore_trace_is_a_reactive_model() {
    let f = to_n_distant(&fixture("bookstore.kelps"), 6).unwrap();
    let trace = model_from_acts(
        &f,
        &[
            (2, ga2("allocate", &[Term::cons("john"), Term::cons("hamlet"), Term::Int(6)])),
            (2, ga2("allocate", &[Term::cons("john"), Term::cons("emma"), Term::Int(2)])),
            (3, ga2("process", &[Term::cons("john"), Term::cons("hamlet")])),
            (3, ga2("process", &[Term::cons("john"), Term::cons("emma")])),
            (3, ga2("allocate", &[Term::cons("bob"), Term::cons("emma"), Term::Int(1)])),
            (3, ga2("order", &[Term::cons("emma"), Term::Int(20)])),
            (4, ga2("process", &[Term::cons("bob"), Term::cons("emma")])),
            (6, ga2("apologise", &[Term::cons("tom"), Term::cons("emma")])),
        ],
    );
    // The narrated states come out of the causal theory.
    assert!(trace.state(2).contains(&ga2("avail", &[Term::cons("hamlet"), Term::Int(5)])));
    assert!(trace.state(3).contains(&ga2("on_order", &[Term::cons("emma")])));
    assert_eq!(trace.state(4), trace.state(3));
    let verdict = check_reactive_model(&f, &trace, &budget()).unwrap();
    assert_eq!(verdict, None, "trace rejected: {verdict:?}");
}

#[test]
fn frame_property_and_supportedness_hold_for_enumerated_models() {
    let f = to_n_distant(&fixture("evacuation.kelps"), 7).unwrap();
    for m in enumerate_reactive_models(&f, &budget()).unwrap() {
        for t in 1..=m.n {
            let prev = m.state(t - 1).clone();
            let cur = m.state(t).clone();
            let ev = m.events_at(t);
            let init: BTreeSet<GroundAtom> = successor_state(
                &BTreeSet::new(),
                &ev,
                &f.causal.post,
                &f.aux,
            );
            let terminated: BTreeSet<GroundAtom> = prev
                .difference(&successor_state(&prev, &ev, &f.causal.post, &f.aux))
                .cloned()
                .collect();
            for p in &cur {
                assert!(
                    init.contains(p) || (prev.contains(p) && !terminated.contains(p)),
                    "{p} at {t} has no frame justification"
                );
            }
            for p in &prev {
                if !terminated.contains(p) {
                    assert!(cur.contains(p), "{p} dropped at {t} without termination");
                }
            }
        }
        for (t, acts) in &m.acts {
            for a in acts {
                assert!(is_supported(a, *t, &m, &f, &budget()).unwrap());
            }
        }
    }
}

#[test]
fn pruned_enumeration_matches_unpruned_on_tiny_instances() {
    for (name, n) in [("toy2.kelps", 2), ("chain.kelps", 4)] {
        let f = to_n_distant(&fixture(name), n).unwrap();
        let pruned = enumerate_reactive_models(&f, &budget()).unwrap();
        let unpruned = enumerate_unpruned(&f);
        assert_eq!(pruned, unpruned, "{name}");
    }
}

#[test]
fn restricted_rules_stay_models_of_the_unbounded_framework() {
    // Rules passing the fluent/event restriction: every n-distant model,
    // re-read at horizon 2n with frozen tail, still satisfies the rules.
    for (name, n) in [("evacuation.kelps", 7u32), ("bookstore_small.kelps", 6)] {
        let base = fixture(name);
        assert!(base.rules.iter().all(check_fluent_event_restriction));
        let f = to_n_distant(&base, n).unwrap();
        let wide = to_n_distant(&base, 2 * n).unwrap();
        let models = enumerate_reactive_models(&f, &budget()).unwrap();
        assert!(!models.is_empty());
        for m in models {
            let mut ext = m.clone();
            ext.n = 2 * n;
            for _ in n..2 * n {
                ext.states.push(ext.states.last().unwrap().clone());
            }
            for r in &wide.rules {
                assert!(
                    evaluate_rule(r, &ext, &wide, &budget()).unwrap(),
                    "{name}: rule {} fails at horizon {}",
                    r.id,
                    2 * n
                );
            }
        }
    }
}

#[test]
fn dump_format_lists_states_and_acts() {
    let f = to_n_distant(&fixture("toy2.kelps"), 2).unwrap();
    let models = enumerate_reactive_models(&f, &budget()).unwrap();
    let dump = dump_models(models.iter());
    assert!(dump.starts_with("MODEL 1\nSTATE 0: \nACTS 1: a1\n"));
    assert!(dump.contains("ACTS 2: a2\n"));
}

// ------------------------------------------------ sequencing properties

mod sequencing {
    use kelps_forge::syntax::{Condition, TimeExpr};
    use kelps_forge::temporal::respects_sequencing;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn ground_event(name: &str, t: u32) -> Condition {
        Condition::event(name, vec![], TimeExpr::Const(t))
    }

    prop_compose! {
        fn instance()(
            earlier_times in prop::collection::vec(0u32..6, 1..4),
            bounds in prop::collection::vec((0u32..8, 0u32..8), 1..3),
        ) -> (Vec<Condition>, Vec<Condition>) {
            let earlier: Vec<Condition> = earlier_times
                .iter()
                .enumerate()
                .map(|(i, t)| ground_event(&format!("e{i}"), *t))
                .collect();
            let mut later = vec![Condition::event("act", vec![], TimeExpr::var("T"))];
            for (lo, hi) in &bounds {
                later.push(Condition::lt(TimeExpr::Const(*lo), TimeExpr::var("T")));
                later.push(Condition::le(TimeExpr::var("T"), TimeExpr::Const(*hi)));
            }
            (earlier, later)
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        /// Dropping earlier conditions can only preserve a sequencing:
        /// the remaining maximum moves down, never up.
        #[test]
        fn sequencing_is_monotone_under_dropping_earlier((earlier, later) in instance()) {
            let aux = BTreeSet::new();
            let full = respects_sequencing(&earlier, &later, &aux, 8).unwrap();
            prop_assume!(full.is_some());
            for skip in 0..earlier.len() {
                let sub: Vec<Condition> = earlier
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, c)| c.clone())
                    .collect();
                let witness = respects_sequencing(&sub, &later, &aux, 8).unwrap();
                prop_assert!(
                    witness.is_some(),
                    "dropping condition {skip} lost the sequencing"
                );
            }
        }

        /// Any witness returned satisfies the definition: constraints
        /// true and all earlier timestamps strictly before later ones.
        #[test]
        fn witnesses_are_valid((earlier, later) in instance()) {
            let aux = BTreeSet::new();
            if let Some(theta) = respects_sequencing(&earlier, &later, &aux, 8).unwrap() {
                for c in earlier.iter().chain(&later) {
                    if let Condition::Temporal(tc) = c {
                        prop_assert_eq!(tc.holds(&theta), Some(true));
                    }
                }
                let emax = earlier.iter().filter_map(|c| c.time()).filter_map(|t| t.value(&theta)).max();
                let lmin = later.iter().filter_map(|c| c.time()).filter_map(|t| t.value(&theta)).min();
                if let (Some(e), Some(l)) = (emax, lmin) {
                    prop_assert!(e < l);
                }
            }
        }
    }
}
