use proptest::prelude::*;

use flawwalk::causality::build_causality;
use flawwalk::corpus;
use flawwalk::forests::{
    break_forest, break_sequence, check_break_structure, check_recursive_structure, reconstruct_witness,
    recursive_forest,
};
use flawwalk::walks::trace::TraceLog;
use flawwalk::walks::{permutation_walk, recursive_walk, run_walk, Recording, RecursiveChoice, Unfiltered, WalkConfig, WalkKind};
use flawwalk::ExplicitInstance;

/// Span and causality graph in the log's interned ids.
fn localized(inst: &ExplicitInstance, log: &TraceLog) -> (Vec<usize>, flawwalk::causality::CausalityGraph) {
    let global = build_causality(inst);
    let to_global: Vec<usize> = log.flaws.iter().map(|n| inst.flaw_index(n).unwrap()).collect();
    let mut r = flawwalk::causality::CausalityGraph::new(log.flaws.len());
    for (a, &ga) in to_global.iter().enumerate() {
        for (b, &gb) in to_global.iter().enumerate() {
            if let Some(p) = global.provenance(ga, gb) {
                r.add_arc(a, b, p);
            }
        }
    }
    let span: Vec<usize> = inst
        .span_set()
        .into_iter()
        .filter_map(|f| log.flaws.iter().position(|n| n == inst.flaw_name(f)))
        .collect();
    (span, r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn break_forests_round_trip(which in 0usize..8, seed in any::<u64>(), budget in 0u64..30) {
        let inst = corpus::all().swap_remove(which);
        let cfg = WalkConfig::new(seed, budget).recording(Recording::Full);
        let traj = permutation_walk(&inst, &cfg);
        let log = TraceLog::from_trajectory(&inst, &traj).unwrap();
        let order = log.order();
        let seq = break_sequence(&log).unwrap();
        prop_assert_eq!(seq.len(), log.steps.len());
        let forest = break_forest(&seq, &order).unwrap();
        prop_assert_eq!(forest.len(), log.steps.len());
        prop_assert_eq!(reconstruct_witness(&forest, &order).unwrap(), log.witness());
        let (span, r) = localized(&inst, &log);
        prop_assert!(check_break_structure(&forest, &span, &r).is_ok());
    }

    #[test]
    fn recursive_forests_round_trip(which in 0usize..8, seed in any::<u64>(), budget in 0u64..30) {
        let inst = corpus::all().swap_remove(which);
        let r = build_causality(&inst);
        let cfg = WalkConfig::new(seed, budget).recording(Recording::Full).check_returns(true);
        let traj = recursive_walk(&inst, &r, &cfg);
        prop_assert_eq!(traj.return_violations, 0);
        let log = TraceLog::from_trajectory(&inst, &traj).unwrap();
        let order = log.order();
        let forest = recursive_forest(&log).unwrap();
        prop_assert_eq!(reconstruct_witness(&forest, &order).unwrap(), log.witness());
        let (span, local) = localized(&inst, &log);
        prop_assert!(check_recursive_structure(&forest, &span, &local).is_ok());
        prop_assert_eq!(TraceLog::parse(&log.to_text()).unwrap(), log);
    }

    #[test]
    fn unfiltered_recursion_is_the_permutation_walk(which in 0usize..8, seed in any::<u64>()) {
        let inst = corpus::all().swap_remove(which);
        let cfg = WalkConfig::new(seed, 50).recording(Recording::Full);
        let a = permutation_walk(&inst, &cfg);
        let b = run_walk(&inst, RecursiveChoice::new(&Unfiltered, false), WalkKind::Recursive, &cfg);
        prop_assert_eq!(a.witness(), b.witness());
        prop_assert_eq!(a.states(), b.states());
    }
}
