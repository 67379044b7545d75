//! Pattern monitors against a direct reading of "after a, before b, no c".

use lockctl_core::domain::{Action, Alphabet, PlantConfig};
use lockctl_core::monitor::catalog::{catalog, emergency_light_patterns, patterns, CheckKind};
use lockctl_core::monitor::{Binding, SafetyPattern};
use proptest::prelude::*;

/// Bindings violated first, with the trace position, or `None`.
fn oracle(p: &SafetyPattern, bindings: &[Binding], trace: &[Action]) -> Option<(u64, Vec<usize>)> {
    let mut first: Option<(u64, Vec<usize>)> = None;
    for (bi, b) in bindings.iter().enumerate() {
        let (a, bl, c) = (p.a.instantiate(b), p.b.instantiate(b), p.c.instantiate(b));
        for j in 0..trace.len() {
            if !c.matches(&trace[j]) {
                continue;
            }
            let last = (0..j).rev().find(|&k| a.matches(&trace[k]) || bl.matches(&trace[k]));
            let armed = match last {
                Some(k) => a.matches(&trace[k]),
                None => p.initial,
            };
            if armed {
                match &mut first {
                    Some((seq, v)) if *seq == j as u64 => v.push(bi),
                    Some((seq, _)) if *seq < j as u64 => {}
                    _ => first = Some((j as u64, vec![bi])),
                }
                break;
            }
        }
    }
    first
}

fn all_patterns(config: &PlantConfig) -> Vec<(String, SafetyPattern)> {
    let mut v: Vec<(String, SafetyPattern)> = catalog()
        .iter()
        .filter(|r| r.kind == CheckKind::PatternMonitor)
        .flat_map(|r| patterns(r.id).into_iter().map(move |p| (r.id.to_string(), p)))
        .collect();
    v.extend(emergency_light_patterns(config));
    v
}

/// Actions that touch the pattern under some binding, plus a bystander.
fn pool(p: &SafetyPattern, bindings: &[Binding], alphabet: &Alphabet) -> Vec<Action> {
    let mut v: Vec<Action> = alphabet
        .actions()
        .iter()
        .copied()
        .filter(|x| {
            bindings.iter().any(|b| {
                p.a.instantiate(b).matches(x) || p.b.instantiate(b).matches(x) || p.c.instantiate(b).matches(x)
            })
        })
        .collect();
    v.push(Action::Skip);
    v
}

fn agree(config: &PlantConfig, idx: usize, picks: &[usize]) -> Result<(), TestCaseError> {
    let alphabet = Alphabet::new(config);
    let all = all_patterns(config);
    let (id, p) = &all[idx % all.len()];
    let bindings = p.bindings(config).unwrap();
    let m = p.compile(&alphabet).unwrap();
    let pool = pool(p, &bindings, &alphabet);
    let trace: Vec<Action> = picks.iter().map(|&i| pool[i % pool.len()]).collect();
    let mut st = m.initial_state();
    for (i, x) in trace.iter().enumerate() {
        st = m.advance(&st, x, i as u64);
    }
    let expected = oracle(p, &bindings, &trace);
    match (st.violation, expected) {
        (None, None) => {}
        (Some(v), Some((seq, bs))) => {
            prop_assert_eq!(v.seq, seq, "{}", id);
            prop_assert!(bs.contains(&v.binding), "{}: binding {} not in {:?}", id, v.binding, bs);
            prop_assert_eq!(m.bindings()[v.binding].clone(), bindings[v.binding].clone());
        }
        (got, want) => prop_assert!(false, "{}: monitor {:?} oracle {:?} on {:?}", id, got, want, trace),
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1500))]

    #[test]
    fn reduced_patterns_agree(idx in 0usize..1000, picks in prop::collection::vec(0usize..10_000, 0..40)) {
        agree(&PlantConfig::reduced(), idx, &picks)?;
    }

    #[test]
    fn full_patterns_agree(idx in 0usize..1000, picks in prop::collection::vec(0usize..10_000, 0..60)) {
        agree(&PlantConfig::full(), idx, &picks)?;
    }
}

#[test]
fn every_pattern_can_be_violated_on_its_own_pool() {
    // Guards against vacuous pools: each pattern fires on some short trace.
    let config = PlantConfig::reduced();
    let alphabet = Alphabet::new(&config);
    for (id, p) in all_patterns(&config) {
        let bindings = p.bindings(&config).unwrap();
        let b = &bindings[0];
        let first = |set: &lockctl_core::monitor::PredicateSet| {
            alphabet
                .actions()
                .iter()
                .copied()
                .find(|x| set.instantiate(b).matches(x))
        };
        let c = first(&p.c).unwrap_or_else(|| panic!("{id}: no forbidden action"));
        let trace: Vec<Action> = match (p.initial, first(&p.a)) {
            (true, _) => vec![c],
            (false, Some(a)) => vec![a, c],
            (false, None) => panic!("{id}: no trigger"),
        };
        assert!(oracle(&p, &bindings, &trace).is_some(), "{id}: {trace:?}");
    }
}
