//! The hybrid loop without a solver: residue mechanics on the applicant
//! narrative, window programs against the published per-cycle rule sets,
//! and commutation of direct rewriting with KELPS-side stepping.

use std::collections::{BTreeMap, BTreeSet};

use kelps_forge::asp::translate::EmitOptions;
use kelps_forge::asp::{diff_programs, text, AspProgram, AspRule};
use kelps_forge::hybrid::*;
use kelps_forge::parser::parse;
use kelps_forge::syntax::*;

fn fixture(name: &str) -> Framework {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn ga(name: &str) -> GroundAtom {
    GroundAtom::nullary(name)
}

fn ga2(name: &str, args: &[&str]) -> GroundAtom {
    GroundAtom::new(name, args.iter().map(|a| Term::cons(a)).collect())
}

fn evs(atoms: &[GroundAtom]) -> BTreeSet<GroundAtom> {
    atoms.iter().cloned().collect()
}

fn assert_same(mine: &AspProgram, expected_text: &str, label: &str) {
    let mine: Vec<AspRule> = mine.iter().map(|t| t.rule.clone()).collect();
    let expected = text::parse_program(expected_text).expect("expected text parses");
    if let Err((only_mine, only_expected)) = diff_programs(&mine, &expected) {
        panic!(
            "{label}: programs differ.\nonly in emitted:\n  {}\nonly in expected:\n  {}",
            only_mine.join("\n  "),
            only_expected.join("\n  ")
        );
    }
}

const STANDARD_PARTS: &str = r#"
:-ant(ID,X,Ts),not consTrue(ID,X,Ts),time(Ts).
consTrue(ID,X,Ts):-cons(ID,X,Ts,Ts1),time(Ts1).
holds(P,Ts):-initiates(E,P),happens(E,Ts),time(Ts).
holds(P,Ts):-holds(P,Ts-1),not broken(P,Ts),time(Ts-1),time(Ts).
broken(P,Ts):-terminates(E,P),happens(E,Ts),time(Ts).
:-happens(a2,Ts),happens(a3,Ts),time(Ts).
ant(1,(Ts),Ts):-happens(a,Ts),time(Ts).
cons(1,(T),T,Ts):-ant(1,(T),T),happens(a1,T1),T<T1,happens(a2,Ts),Ts=T1+1,time(T1),time(Ts).
supported(a1,Ts):-ant(1,(T),T),T<Ts,time(Ts),time(Ts+1).
supported(a2,Ts):-ant(1,(T),T),happens(a1,T1),T<T1,Ts=T1+1,time(T1),time(Ts).
"#;

fn set_text(k: u32, extra: &str) -> String {
    let choice = format!("0{{happens(Act,Ts)}}1:-supported(Act,Ts),{k}<Ts,time(Ts).");
    format!("time({k}..{}).\n{choice}\n{STANDARD_PARTS}\n{extra}", k + 3)
}

/// The per-cycle rule sets of the sliding-window narrative.
fn expected_sets() -> [String; 4] {
    let set1_extra = "
cons(1,(1),1,Ts):-happens(a1,T1),1<T1,happens(a2,Ts),Ts=T1+1,time(T1),time(Ts).
supported(a1,Ts):-1<Ts,time(Ts),time(Ts+1).
supported(a2,Ts):-happens(a1,T1),1<T1,Ts=T1+1,time(T1),time(Ts).
:-not consTrue(1,(1),1).
";
    let set2_extra = format!(
        "{set1_extra}
cons(1,(1),1,3):-happens(a2,3).
supported(a2,3).
happens(a3,3):-time(3).
"
    );
    let set3_extra = format!(
        "{set1_extra}
cons(1,(1),1,3):-happens(a2,3).
cons(1,(1),1,4):-happens(a2,4).
supported(a2,4).
"
    );
    [
        set_text(0, ""),
        set_text(1, set1_extra),
        set_text(2, &set2_extra),
        set_text(3, &set3_extra),
    ]
}

/// Scenario inputs per cycle: events in `[T, T+1)` and foreknowledge
/// arriving during the cycle.
type Anticipations = BTreeMap<u32, BTreeSet<GroundAtom>>;

fn scenario() -> Vec<(BTreeSet<GroundAtom>, Anticipations)> {
    let mut learn_a3 = BTreeMap::new();
    learn_a3.insert(3u32, evs(&[ga("a3")]));
    vec![
        (evs(&[ga("a")]), BTreeMap::new()),
        (evs(&[ga("a1")]), learn_a3),
        (evs(&[ga("a1"), ga("a3")]), BTreeMap::new()),
        (evs(&[ga("a2")]), BTreeMap::new()),
    ]
}

#[test]
fn windows_reproduce_the_published_sets() {
    let f = fixture("chain.kelps");
    let opts = EmitOptions::default();
    let mut h = HybridState::new(f, 3);
    let expected = expected_sets();
    for (cycle, (events, learned)) in scenario().into_iter().enumerate() {
        let w = window_translate(&h, &opts).unwrap();
        assert_same(&w, &expected[cycle], &format!("set {cycle}"));
        if cycle == 3 {
            break;
        }
        h = step(&h, &events).unwrap();
        for (at, news) in learned {
            h.anticipated.entry(at).or_default().extend(news);
        }
    }
}

#[test]
fn rewriting_commutes_with_stepping() {
    let f = fixture("chain.kelps");
    let opts = EmitOptions::default();
    let mut h = HybridState::new(f.clone(), 3);
    for (cycle, (events, learned)) in scenario().into_iter().enumerate() {
        let before = window_translate(&h, &opts).unwrap();
        let inputs = RewriteInputs {
            events: events.clone(),
            fluents: kelps_forge::oracle::successor_state(
                &h.state,
                &events,
                &f.causal.post,
                &f.aux,
            ),
            anticipated_new: learned.clone(),
        };
        let rewritten = rewrite_asp(&before, &inputs).unwrap();

        h = step(&h, &events).unwrap();
        for (at, news) in learned {
            h.anticipated.entry(at).or_default().extend(news);
        }
        let fresh = window_translate(&h, &opts).unwrap();

        let lhs: Vec<AspRule> = rewritten.iter().map(|t| t.rule.clone()).collect();
        let rhs: Vec<AspRule> = fresh.iter().map(|t| t.rule.clone()).collect();
        if let Err((only_l, only_r)) = diff_programs(&lhs, &rhs) {
            panic!(
                "cycle {cycle}: rewrite and step disagree.\nonly rewritten:\n  {}\nonly stepped:\n  {}",
                only_l.join("\n  "),
                only_r.join("\n  ")
            );
        }
    }
}

#[test]
fn rewrite_without_events_only_shifts_the_window() {
    let f = fixture("chain.kelps");
    let opts = EmitOptions::default();
    let h = HybridState::new(f, 3);
    let w0 = window_translate(&h, &opts).unwrap();
    let w1 = rewrite_asp(&w0, &RewriteInputs::default()).unwrap();
    assert_same(&w1, &set_text(1, ""), "idle shift");
}

#[test]
fn applicant_residues_follow_the_narrative() {
    let f = fixture("applicants.kelps");
    // The loop framework carries no pre-recorded external events; they
    // arrive through step inputs.
    let mut clean = f.clone();
    clean.ext.clear();
    let mut h = HybridState::new(clean, 5);

    // apply(john,msc) at 1 leaves offer/accept with a tightened lower
    // bound.
    h = step(&h, &evs(&[ga2("apply", &["john", "msc"])])).unwrap();
    assert_eq!(h.residues.len(), 1);
    let r = &h.residues[0];
    assert!(r
        .remaining
        .iter()
        .any(|c| matches!(c, Condition::Event { name, .. } if name == "offer")));
    assert!(r
        .remaining
        .iter()
        .any(|c| c.as_temporal()
            == Some(&TemporalConstraint::Lt(TimeExpr::Const(1), TimeExpr::var("T2")))));

    // offer at 3: accept before 33.
    h = step(&h, &BTreeSet::new()).unwrap();
    h = step(&h, &evs(&[ga2("offer", &["john", "msc"])])).unwrap();
    let tightened = h
        .residues
        .iter()
        .find(|r| {
            r.remaining
                .iter()
                .all(|c| !matches!(c, Condition::Event { name, .. } if name == "offer"))
        })
        .expect("offer consumed in some residue");
    assert!(tightened.remaining.iter().any(|c| c.as_temporal()
        == Some(&TemporalConstraint::Le(TimeExpr::var("T"), TimeExpr::Const(33)))));

    // accept at 16 triggers the goal with the instantiated deadlines.
    for _ in 4..16 {
        h = step(&h, &BTreeSet::new()).unwrap();
    }
    h = step(&h, &evs(&[ga2("accept", &["john", "msc"])])).unwrap();
    let goal = h
        .goals
        .iter()
        .find(|g| g.trigger_time == 16)
        .expect("triggered goal");
    assert_eq!(
        goal.args,
        vec![Term::cons("john"), Term::cons("msc"), Term::Int(16)]
    );
    let alt = &goal.alts[0];
    assert!(alt.remaining.iter().any(|c| c.as_temporal()
        == Some(&TemporalConstraint::Eq(TimeExpr::var("T4"), TimeExpr::Const(17)))));
    assert!(alt.remaining.iter().any(|c| c.as_temporal()
        == Some(&TemporalConstraint::Le(TimeExpr::var("T5"), TimeExpr::Const(46)))));
}

#[test]
fn residues_are_discarded_after_their_deadline() {
    let f = fixture("applicants.kelps");
    let mut clean = f.clone();
    clean.ext.clear();
    let mut h = HybridState::new(clean, 5);
    h = step(&h, &evs(&[ga2("apply", &["john", "msc"])])).unwrap();
    h = step(&h, &BTreeSet::new()).unwrap();
    h = step(&h, &evs(&[ga2("offer", &["john", "msc"])])).unwrap();
    let tightened = |r: &Residue| {
        r.remaining
            .iter()
            .all(|c| !matches!(c, Condition::Event { name, .. } if name == "offer"))
    };
    assert!(h.residues.iter().any(tightened));
    // No acceptance by the deadline at 33: the accept-only residue
    // evaporates; the rule keeps waiting for another offer.
    for _ in h.time..40 {
        h = step(&h, &BTreeSet::new()).unwrap();
    }
    assert!(
        !h.residues.iter().any(tightened),
        "stale residues: {:?}",
        h.residues
    );
    assert!(h.goals.is_empty());
}

#[test]
fn step_rejects_precondition_violations() {
    let f = fixture("chain.kelps");
    let mut clean = f.clone();
    clean.ext.clear();
    let h = HybridState::new(clean, 3);
    let err = step(&h, &evs(&[ga("a2"), ga("a3")])).unwrap_err();
    assert!(matches!(err, HybridError::PreconditionViolation { t: 1, .. }));
}

#[test]
fn action_selection_prefers_the_earliest_plan() {
    use kelps_forge::solver::AnswerSet;
    let set = |atoms: &[&str]| AnswerSet {
        atoms: atoms
            .iter()
            .map(|a| kelps_forge::solver::parse_ground_atom(a).unwrap())
            .collect(),
        costs: vec![],
        optimal: true,
    };
    let f = fixture("chain.kelps");
    let mut h = HybridState::new(f, 3);
    h.time = 1;
    let late = set(&["happens(a1,3)", "happens(a2,4)"]);
    let early = set(&["happens(a1,2)", "happens(a2,3)"]);
    let acts =
        select_actions(&[late.clone(), early], &h, SelectPolicy::EarliestLexicographic).unwrap();
    assert_eq!(acts, evs(&[ga("a1")]));
    // The later plan schedules nothing for the next interval.
    let acts = select_actions(&[late], &h, SelectPolicy::EarliestLexicographic).unwrap();
    assert!(acts.is_empty());
    // No models at all is reported upward.
    assert!(matches!(
        select_actions(&[], &h, SelectPolicy::EarliestLexicographic),
        Err(HybridError::NoModel { .. })
    ));
}

#[test]
fn event_scripts_parse() {
    let s = parse_event_script(
        "at 1: a\n% comment\nexpect at 3: a3\nat 3: a3, a1\n",
    )
    .unwrap();
    assert_eq!(s.at[&1], evs(&[ga("a")]));
    assert_eq!(s.at[&3], evs(&[ga("a3"), ga("a1")]));
    assert_eq!(s.expect[&3], evs(&[ga("a3")]));
    assert!(parse_event_script("at zero: a\n").is_err());
}

/// Residue soundness: a goal spawns exactly when the original
/// antecedent is genuinely true in the event history. Probed by giving
/// the rule a fresh consequent and asking the oracle whether the bare
/// history (no probe action) violates it.
#[test]
fn goals_spawn_iff_the_antecedent_holds_in_the_history() {
    use kelps_forge::oracle::{check_reactive_model, Reason, SearchBudget};

    let f = {
        let mut f = fixture("applicants.kelps");
        f.ext.clear();
        f
    };
    let original = &f.rules[0];
    // Same antecedent, fresh consequent: the history alone satisfies
    // this rule exactly when the antecedent never fires.
    let probe_rule = ReactiveRule::new(
        1,
        original.antecedent.clone(),
        vec![vec![
            Condition::event("probe", vec![], TimeExpr::var("Tp")),
            Condition::lt(TimeExpr::var("T"), TimeExpr::var("Tp")),
        ]],
    );
    let schedule: Vec<(u32, Vec<GroundAtom>)> = vec![
        (1, vec![ga2("apply", &["john", "msc"])]),
        (3, vec![ga2("offer", &["john", "msc"])]),
        (16, vec![ga2("accept", &["john", "msc"])]),
    ];
    let mut h = HybridState::new(f.clone(), 4);
    let mut history: Vec<(u32, GroundAtom)> = Vec::new();
    for t in 1..=17u32 {
        let events: BTreeSet<GroundAtom> = schedule
            .iter()
            .filter(|(at, _)| *at == t)
            .flat_map(|(_, evs)| evs.iter().cloned())
            .collect();
        for e in &events {
            history.push((t, e.clone()));
        }
        h = step(&h, &events).unwrap();

        // Oracle view of the bare history.
        let mut probe_f = Framework {
            rules: vec![probe_rule.clone()],
            causal: f.causal.clone(),
            aux: f.aux.clone(),
            initial_state: f.initial_state.clone(),
            ext: BTreeMap::new(),
            horizon: None,
        };
        let n = h.time + 30;
        for (at, e) in &history {
            probe_f.ext.entry(*at).or_default().insert(e.clone());
        }
        let probe_f = kelps_forge::ndistant::to_n_distant(&probe_f, n).unwrap();
        let mut bare = ModelStructure::new(n, probe_f.initial_state.clone());
        bare.ext = probe_f.ext.clone();
        bare.aux = probe_f.aux.clone();
        for tt in 1..=n {
            let next = kelps_forge::oracle::successor_state(
                bare.state(tt - 1),
                &bare.events_at(tt),
                &probe_f.causal.post,
                &probe_f.aux,
            );
            bare.states.push(next);
        }
        let verdict = check_reactive_model(&probe_f, &bare, &SearchBudget::default()).unwrap();
        let triggered = verdict == Some(Reason::RuleUnsatisfied { id: 1 });
        assert!(
            triggered || verdict.is_none(),
            "unexpected verdict {verdict:?} at {t}"
        );
        let goal_spawned = !h.goals.is_empty();
        assert_eq!(
            goal_spawned, triggered,
            "at time {t}: goals={:?} but oracle says triggered={triggered}",
            h.goals
        );
    }
}

/// Commutation also holds on scenarios with fluents, negated antecedent
/// conditions, auxiliary literals, and offset arithmetic.
#[test]
fn rewriting_commutes_on_fluent_scenarios() {
    let cases: Vec<(&str, Vec<BTreeSet<GroundAtom>>)> = vec![
        (
            "guard.kelps",
            vec![
                BTreeSet::new(),
                evs(&[ga("send_guard")]),
                evs(&[ga("alarm")]),
                BTreeSet::new(),
            ],
        ),
        (
            "guard.kelps",
            vec![
                BTreeSet::new(),
                BTreeSet::new(),
                evs(&[ga("alarm")]),
                evs(&[ga("evacuate")]),
            ],
        ),
        (
            "drinking.kelps",
            vec![
                evs(&[ga("thirsty")]),
                evs(&[ga("sunset"), GroundAtom::new("drink", vec![Term::cons("water")])]),
                evs(&[ga("gotoBed")]),
                BTreeSet::new(),
            ],
        ),
    ];
    for (name, cycles) in cases {
        let mut f = fixture(name);
        f.ext.clear();
        let opts = EmitOptions::default();
        let mut h = HybridState::new(f.clone(), 4);
        for (cycle, events) in cycles.into_iter().enumerate() {
            let before = window_translate(&h, &opts).unwrap();
            let inputs = RewriteInputs {
                events: events.clone(),
                fluents: kelps_forge::oracle::successor_state(
                    &h.state,
                    &events,
                    &f.causal.post,
                    &f.aux,
                ),
                anticipated_new: BTreeMap::new(),
            };
            let rewritten = rewrite_asp(&before, &inputs).unwrap();
            h = step(&h, &events).unwrap();
            let fresh = window_translate(&h, &opts).unwrap();
            let lhs: Vec<AspRule> = rewritten.iter().map(|t| t.rule.clone()).collect();
            let rhs: Vec<AspRule> = fresh.iter().map(|t| t.rule.clone()).collect();
            if let Err((l, r)) = diff_programs(&lhs, &rhs) {
                panic!(
                    "{name} cycle {cycle}: rewrite != step.\nonly rewritten:\n  {}\nonly stepped:\n  {}",
                    l.join("\n  "),
                    r.join("\n  ")
                );
            }
        }
    }
}
