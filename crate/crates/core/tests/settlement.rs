use std::collections::BTreeSet;

use proptest::prelude::*;
use qnet_core::mechanism::AgentId;
use qnet_core::sim::{generate_tree, run_on_tree, settle_on_tree, Behavior, GenConfig, StrategyProfile};
use qnet_core::Mechanism;

fn profile_for(tree: &qnet_core::sim::QueryTree, picks: &[(usize, u8)]) -> StrategyProfile {
    let nodes: Vec<_> = tree.nodes().filter(|n| n.id != tree.root()).collect();
    let mut p = StrategyProfile::truthful();
    for &(k, kind) in picks {
        let node = nodes[k % nodes.len()];
        if node.holds_answer && kind % 2 == 0 {
            p = p.with(node.id, Behavior::DelayAnswer);
        } else if !node.children.is_empty() {
            let dropped: BTreeSet<AgentId> =
                node.children.iter().enumerate().filter(|(i, _)| (kind as usize >> i) & 1 == 1).map(|(_, c)| *c).collect();
            let dropped = if dropped.is_empty() { [node.children[0]].into() } else { dropped };
            p = p.with(node.id, Behavior::Withhold(dropped));
        }
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // the level-by-level shortcut agrees with full re-realization
    #[test]
    fn shortcut_matches_full_realization(
        seed in any::<u64>(),
        mean in 1.2f64..3.0,
        answer in 0.05f64..0.6,
        picks in proptest::collection::vec((any::<usize>(), any::<u8>()), 0..4),
    ) {
        let cfg = GenConfig { offspring_mean: mean, answer_prob: answer, max_depth: 6, max_nodes: 120, seed };
        let tree = generate_tree(&cfg).unwrap();
        let profile = profile_for(&tree, &picks);
        let mech = Mechanism::dgm(0.3, 2.0).unwrap();
        let full = run_on_tree(&mech, &tree, &profile, seed).unwrap();
        let (path, alloc) = settle_on_tree(&mech, &tree, &profile, seed).unwrap();
        prop_assert_eq!(full.path, path);
        prop_assert_eq!(full.allocation, alloc);
    }
}
