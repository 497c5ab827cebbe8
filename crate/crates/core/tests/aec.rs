use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flawwalk::aec::{
    count_cycles_through_edge, degeneracy_orient, find_bichromatic_cycles, four_available, greedy_initial, in_omega,
    is_acyclic, palette_size, q_for, random_degenerate, recolor_cycle, EdgeColoring, SimpleGraph,
};

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> SimpleGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    SimpleGraph::new(n, &edges).unwrap()
}

/// Every simple cycle as a sorted edge set, by extending paths from their
/// smallest vertex.
fn all_cycles(g: &SimpleGraph) -> BTreeSet<Vec<usize>> {
    let mut out = BTreeSet::new();
    fn extend(g: &SimpleGraph, start: usize, path: &mut Vec<usize>, edges: &mut Vec<usize>, out: &mut BTreeSet<Vec<usize>>) {
        let v = *path.last().unwrap();
        for &(w, e) in g.incident(v) {
            if w == start && path.len() >= 3 && !edges.contains(&e) {
                let mut c = edges.clone();
                c.push(e);
                c.sort_unstable();
                out.insert(c);
            } else if w > start && !path.contains(&w) {
                path.push(w);
                edges.push(e);
                extend(g, start, path, edges, out);
                path.pop();
                edges.pop();
            }
        }
    }
    for s in 0..g.num_vertices() {
        extend(g, s, &mut vec![s], &mut Vec::new(), &mut out);
    }
    out
}

fn is_bichromatic(c: &[usize], coloring: &EdgeColoring) -> bool {
    let colors: BTreeSet<_> = c.iter().map(|&e| coloring.color(e)).collect();
    colors.len() == 2 && colors.iter().all(Option::is_some)
}

/// A proper coloring with few colors, so that two-colored cycles are common.
fn random_proper(g: &SimpleGraph, palette: u32, rng: &mut ChaCha8Rng) -> EdgeColoring {
    let mut c = EdgeColoring::uncolored(g.num_edges(), palette);
    for e in 0..g.num_edges() {
        let (u, v) = g.edge(e);
        let used: BTreeSet<u32> = g
            .incident(u)
            .iter()
            .chain(g.incident(v))
            .filter_map(|&(_, f)| c.color(f))
            .collect();
        let free: Vec<u32> = (0..palette).filter(|x| !used.contains(x)).collect();
        if !free.is_empty() {
            c.set(e, Some(free[rng.gen_range(0..free.len())]));
        }
    }
    c
}

#[test]
fn bichromatic_cycles_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut nonempty = 0;
    for _ in 0..300 {
        let n = rng.gen_range(4..=10);
        let p = rng.gen_range(0.3..0.8);
        let g = random_graph(&mut rng, n, p);
        let colors = rng.gen_range(3..=6);
        let c = random_proper(&g, colors, &mut rng);
        let expected: BTreeSet<Vec<usize>> = all_cycles(&g)
            .into_iter()
            .filter(|cyc| cyc.len() >= 6 && is_bichromatic(cyc, &c))
            .collect();
        let found: BTreeSet<Vec<usize>> = find_bichromatic_cycles(&g, &c, None)
            .iter()
            .map(|f| f.sorted_edges().to_vec())
            .collect();
        assert_eq!(found, expected);
        if !expected.is_empty() {
            nonempty += 1;
        }
        // restriction keeps exactly the cycles meeting the edge set
        let some: Vec<usize> = (0..g.num_edges()).filter(|_| rng.gen::<bool>()).collect();
        let restricted: BTreeSet<Vec<usize>> = find_bichromatic_cycles(&g, &c, Some(&some))
            .iter()
            .map(|f| f.sorted_edges().to_vec())
            .collect();
        let meets: BTreeSet<Vec<usize>> = expected
            .iter()
            .filter(|cyc| cyc.iter().any(|e| some.contains(e)))
            .cloned()
            .collect();
        assert_eq!(restricted, meets);
    }
    assert!(nonempty > 10);
}

#[test]
fn cycle_counts_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..100 {
        let n = rng.gen_range(3..=8);
        let g = random_graph(&mut rng, n, 0.6);
        let cycles = all_cycles(&g);
        for e in 0..g.num_edges() {
            for k in 3..=8 {
                let expected = cycles.iter().filter(|c| c.len() == k && c.contains(&e)).count() as u64;
                assert_eq!(count_cycles_through_edge(&g, e, k, 1 << 30).unwrap(), expected);
            }
        }
    }
}

/// Colors whose assignment to `e` breaks properness or closes a two-colored
/// 4-cycle, found by trying each color and validating.
fn forbidden_by_trial(g: &SimpleGraph, c: &EdgeColoring, e: usize) -> usize {
    (0..c.palette())
        .filter(|&x| {
            let mut t = c.clone();
            t.set(e, Some(x));
            !in_omega(g, &t)
        })
        .count()
}

#[test]
fn forbidden_colors_along_greedy_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..1000 {
        let g = random_degenerate(rng.gen_range(5..=14), rng.gen_range(1..=3), 6, &mut rng);
        let delta = g.max_degree();
        let palette = palette_size(delta, q_for(degeneracy_orient(&g).d, delta));
        let full = greedy_initial(&g, palette);
        let mut partial = EdgeColoring::uncolored(g.num_edges(), palette);
        for e in 0..g.num_edges() {
            let avail = four_available(&g, &partial, e);
            let forbidden = forbidden_by_trial(&g, &partial, e);
            assert_eq!(palette as usize - avail.len(), forbidden);
            assert!(forbidden <= 2 * delta.saturating_sub(1));
            partial.set(e, full.color(e));
        }
        assert_eq!(partial, full);
        assert!(in_omega(&g, &full));
    }
}

#[test]
fn recoloring_stays_in_the_state_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut steps = 0;
    while steps < 1000 {
        let g = random_degenerate(rng.gen_range(8..=30), 3, 6, &mut rng);
        let delta = g.max_degree();
        let palette = palette_size(delta, 3);
        let mut c = greedy_initial(&g, palette);
        for _ in 0..50 {
            let Some(flaw) = find_bichromatic_cycles(&g, &c, None).into_iter().next() else { break };
            let r = recolor_cycle(&g, &c, &flaw, &mut rng);
            assert!(in_omega(&g, &r.coloring));
            assert!(r.min_available >= 3);
            let (e1, e2) = flaw.designated();
            assert_eq!(r.coloring.color(e1), c.color(e1));
            assert_eq!(r.coloring.color(e2), c.color(e2));
            c = r.coloring;
            steps += 1;
        }
    }
}

#[test]
fn edge_lists_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..50 {
        let g = random_degenerate(30, 3, 10, &mut rng);
        let back = SimpleGraph::parse_edge_list(&g.to_edge_list()).unwrap();
        // isolated trailing vertices are not representable
        assert_eq!(back.edges(), g.edges());
    }
}

proptest! {
    #[test]
    fn degeneracy_is_a_valid_bound(seed in any::<u64>(), n in 2usize..40, d in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_degenerate(n, d, 12, &mut rng);
        let dg = degeneracy_orient(&g);
        prop_assert!(dg.d <= d);
        prop_assert!(dg.d <= g.max_degree());
        prop_assert!(dg.out.iter().all(|o| o.len() <= dg.d));
        // some subgraph has minimum degree d: the core at the peel maximum
        let mut removed = vec![false; n];
        let mut reached = dg.d == 0;
        for &v in &dg.order {
            let min_deg = (0..n)
                .filter(|&u| !removed[u])
                .map(|u| g.incident(u).iter().filter(|&&(w, _)| !removed[w]).count())
                .min()
                .unwrap_or(0);
            reached |= min_deg >= dg.d;
            removed[v] = true;
        }
        prop_assert!(reached);
    }

    #[test]
    fn solver_output_is_acyclic(seed in any::<u64>(), n in 2usize..60, d in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_degenerate(n, d, 10, &mut rng);
        let sol = flawwalk::aec::aec_solve(&g, seed, 100_000);
        prop_assert!(sol.valid);
        prop_assert!(is_acyclic(&g, &sol.coloring));
        prop_assert_eq!(sol.audit.violations(), 0);
    }
}
