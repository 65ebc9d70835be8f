//! Systematic enumeration of small trees and tournaments, canonical forms,
//! and the structured random generators used by the stress suites.

use rand::Rng;

use crate::tournament::Tournament;
use crate::tree::{OrientedTree, RootedTree};

/// Number of labeled tournaments of order `n` (`2^(n(n-1)/2)` bitmasks).
pub fn tournament_count(n: usize) -> u64 {
    1u64 << (n * (n - 1) / 2)
}

/// Decodes a bitmask into a labeled tournament: pairs `(u,v)` with `u < v`
/// in lexicographic order, bit set means `u -> v`.
pub fn tournament_from_mask(n: usize, mask: u64) -> Tournament {
    let mut arcs = Vec::with_capacity(n * (n - 1) / 2);
    let mut bit = 0;
    for u in 0..n {
        for v in (u + 1)..n {
            if mask >> bit & 1 == 1 {
                arcs.push((u, v));
            } else {
                arcs.push((v, u));
            }
            bit += 1;
        }
    }
    Tournament::from_arcs(n, arcs).expect("mask decodes to a tournament")
}

/// All rooted-tree shapes on `n` nodes (up to rooted isomorphism), as parent
/// vectors in BFS-friendly preorder (`parent[0]` is unused; `parent[i] < i`).
///
/// Canonical level-sequence successor generation (Beyer-Hedetniemi).
pub fn rooted_tree_parents(n: usize) -> Vec<Vec<usize>> {
    assert!(n >= 1);
    let mut out = vec![];
    if n == 1 {
        out.push(vec![usize::MAX]);
        return out;
    }
    // level sequences start at the "path" sequence 1,2,...,n and end at the
    // "star" sequence 1,2,2,...,2 (levels are 1-based here)
    let mut levels: Vec<usize> = (1..=n).collect();
    loop {
        out.push(parents_from_levels(&levels));
        // find rightmost entry > 2
        let Some(p) = (0..n).rev().find(|&i| levels[i] > 2) else {
            break;
        };
        // q = parent position of p: rightmost index < p with level = level[p]-1
        let q = (0..p).rev().find(|&i| levels[i] == levels[p] - 1).expect("parent exists");
        for i in p..n {
            levels[i] = levels[i - (p - q)];
        }
    }
    out
}

fn parents_from_levels(levels: &[usize]) -> Vec<usize> {
    let n = levels.len();
    let mut parent = vec![usize::MAX; n];
    let mut last_at_level = vec![usize::MAX; n + 2];
    last_at_level[levels[0]] = 0;
    for i in 1..n {
        parent[i] = last_at_level[levels[i] - 1];
        last_at_level[levels[i]] = i;
    }
    parent
}

/// All out-arborescences on `n` nodes up to isomorphism, rooted at node 0.
pub fn out_arborescences(n: usize) -> Vec<RootedTree> {
    rooted_tree_parents(n)
        .into_iter()
        .map(|parent| {
            let arcs: Vec<(usize, usize)> = (1..n).map(|i| (parent[i], i)).collect();
            RootedTree::new(OrientedTree::from_arcs(n, arcs).unwrap(), 0).unwrap()
        })
        .collect()
}

/// All free trees on `n` nodes up to isomorphism, as edge lists.
pub fn free_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = vec![];
    for parent in rooted_tree_parents(n) {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (parent[i], i)).collect();
        let key = free_tree_canonical(n, &edges);
        if seen.insert(key) {
            out.push(edges);
        }
    }
    out
}

fn free_tree_canonical(n: usize, edges: &[(usize, usize)]) -> String {
    // canonical form = min over all roots of the AHU encoding (n is small)
    let mut adj = vec![vec![]; n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    (0..n).map(|r| ahu(&adj, r, usize::MAX)).min().unwrap()
}

fn ahu(adj: &[Vec<usize>], u: usize, parent: usize) -> String {
    let mut subs: Vec<String> =
        adj[u].iter().filter(|&&v| v != parent).map(|&v| ahu(adj, v, u)).collect();
    subs.sort();
    format!("({})", subs.join(""))
}

/// Canonical form of an oriented tree: min over all roots of a rooted AHU
/// encoding that records each arc's direction relative to the father.
pub fn oriented_tree_canonical(t: &OrientedTree) -> String {
    let n = t.node_count();
    (0..n).map(|r| oriented_ahu(t, r, usize::MAX, false)).min().unwrap()
}

fn oriented_ahu(t: &OrientedTree, u: usize, parent: usize, toward_parent: bool) -> String {
    let mut subs = vec![];
    for &v in t.out_nbrs(u) {
        if v != parent {
            subs.push(oriented_ahu(t, v, u, false));
        }
    }
    for &v in t.in_nbrs(u) {
        if v != parent {
            subs.push(oriented_ahu(t, v, u, true));
        }
    }
    subs.sort();
    let tag = if parent == usize::MAX {
        'r'
    } else if toward_parent {
        'i'
    } else {
        'o'
    };
    format!("{tag}({})", subs.join(""))
}

pub fn trees_isomorphic(a: &OrientedTree, b: &OrientedTree) -> bool {
    a.node_count() == b.node_count() && oriented_tree_canonical(a) == oriented_tree_canonical(b)
}

/// Iterates every orientation of every free tree on `n` nodes. Covers all
/// oriented trees on `n` nodes (with repetitions across symmetric shapes),
/// which is what for-all property scans need.
pub fn for_each_oriented_tree(n: usize, mut f: impl FnMut(&OrientedTree)) {
    for edges in free_trees(n) {
        let e = edges.len();
        for mask in 0u64..(1u64 << e) {
            let arcs: Vec<(usize, usize)> = edges
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| if mask >> i & 1 == 1 { (b, a) } else { (a, b) })
                .collect();
            f(&OrientedTree::from_arcs(n, arcs).unwrap());
        }
    }
}

/// Deduplicated list of all oriented trees on `n` nodes up to isomorphism.
pub fn oriented_trees(n: usize) -> Vec<OrientedTree> {
    let mut seen = std::collections::HashSet::new();
    let mut out = vec![];
    for_each_oriented_tree(n, |t| {
        if seen.insert(oriented_tree_canonical(t)) {
            out.push(t.clone());
        }
    });
    out
}

/// Random tree with exactly `k` leaves, `k` in {3, 4}: a spider with `k`
/// legs or, for k=4, possibly two degree-3 branch nodes joined by a path.
/// Arc orientations are independent coins.
pub fn random_tree_with_leaves(n: usize, k: usize, rng: &mut impl Rng) -> OrientedTree {
    assert!(k == 3 || k == 4);
    assert!(n >= k + 1);
    // choose the multiset of path lengths attached to branch nodes
    let mut arcs: Vec<(usize, usize)> = vec![];
    let mut next = 1usize;
    let mut grow_leg = |arcs: &mut Vec<(usize, usize)>, from: usize, len: usize| -> usize {
        let mut cur = from;
        for _ in 0..len {
            arcs.push((cur, next));
            cur = next;
            next += 1;
        }
        cur
    };
    if k == 3 || (k == 4 && rng.gen::<bool>() && n >= 5) {
        // single branch node of degree k, legs sum to n-1
        let mut lens = vec![1usize; k];
        for _ in 0..(n - 1 - k) {
            lens[rng.gen_range(0..k)] += 1;
        }
        for &l in &lens {
            grow_leg(&mut arcs, 0, l);
        }
    } else {
        // two degree-3 branch nodes joined by a path, two legs each
        let mut lens = vec![1usize; 5]; // legs a1,a2,b1,b2 and the joining path
        for _ in 0..(n - 6) {
            lens[rng.gen_range(0..5)] += 1;
        }
        let b = grow_leg(&mut arcs, 0, lens[4]);
        grow_leg(&mut arcs, 0, lens[0]);
        grow_leg(&mut arcs, 0, lens[1]);
        grow_leg(&mut arcs, b, lens[2]);
        grow_leg(&mut arcs, b, lens[3]);
    }
    let arcs = arcs
        .into_iter()
        .map(|(a, b)| if rng.gen::<bool>() { (b, a) } else { (a, b) })
        .collect();
    let t = OrientedTree::from_arcs(n, arcs).unwrap();
    debug_assert_eq!(t.leaf_count(), k);
    t
}

/// Random bi-arborescence with at least one in-leaf and one out-leaf: a
/// random in-arborescence and out-arborescence glued at a common root.
pub fn random_bi_arborescence(n: usize, rng: &mut impl Rng) -> OrientedTree {
    assert!(n >= 3);
    let n_in = 1 + rng.gen_range(1..(n - 1)); // in-part size, >= 2
    let n_out = n - n_in + 1; // shares the root
    let mut arcs = vec![];
    // in-part: nodes 0 (root), 1..n_in with arcs toward the root side
    for v in 1..n_in {
        let father = if v == 1 { 0 } else { rng.gen_range(0..v) };
        arcs.push((v, father));
    }
    // out-part: nodes n_in..n hang below the root side
    for idx in 0..(n_out - 1) {
        let v = n_in + idx;
        let father = if idx == 0 {
            0
        } else {
            let r = rng.gen_range(0..=idx); // 0 => root
            if r == 0 {
                0
            } else {
                n_in + r - 1
            }
        };
        arcs.push((father, v));
    }
    let t = OrientedTree::from_arcs(n, arcs).unwrap();
    debug_assert!(t.bi_arborescence_root().is_some());
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rooted_tree_counts() {
        // A000081: rooted trees on n nodes
        let expect = [1usize, 1, 2, 4, 9, 20, 48, 115];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(rooted_tree_parents(i + 1).len(), e, "n={}", i + 1);
        }
    }

    #[test]
    fn free_tree_counts() {
        // A000055: free trees on n nodes
        let expect = [1usize, 1, 1, 2, 3, 6, 11, 23, 47];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(free_trees(i + 1).len(), e, "n={}", i + 1);
        }
    }

    #[test]
    fn oriented_tree_counts() {
        // A000238: oriented trees on n nodes
        let expect = [1usize, 1, 3, 8, 27, 91];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(oriented_trees(i + 1).len(), e, "n={}", i + 1);
        }
    }

    #[test]
    fn mask_enumeration_out_degree_totals() {
        // spot-check enumeration completeness: out-degree sums over all
        // labeled tournaments of order n total (n choose 2) * 2^(binom-1) per
        // vertex pair orientation count
        for n in 2..=5usize {
            let mut total = 0u64;
            for mask in 0..tournament_count(n) {
                let t = tournament_from_mask(n, mask);
                total += (0..n).map(|u| t.out_degree(u) as u64).sum::<u64>();
            }
            let pairs = (n * (n - 1) / 2) as u64;
            assert_eq!(total, pairs * tournament_count(n));
        }
    }

    #[test]
    fn canonical_detects_isomorphism() {
        let a = OrientedTree::from_arcs(3, vec![(0, 1), (1, 2)]).unwrap();
        let b = OrientedTree::from_arcs(3, vec![(2, 0), (0, 1)]).unwrap();
        assert!(trees_isomorphic(&a, &b));
        let c = OrientedTree::from_arcs(3, vec![(0, 1), (2, 1)]).unwrap();
        assert!(!trees_isomorphic(&a, &c));
        // a directed path is isomorphic to its reverse; an out-star is not
        assert!(trees_isomorphic(&a, &a.reverse()));
        let star = OrientedTree::out_star(4);
        assert!(!trees_isomorphic(&star, &star.reverse()));
    }

    #[test]
    fn leaf_constrained_random_trees() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let t3 = random_tree_with_leaves(12, 3, &mut rng);
            assert_eq!(t3.leaf_count(), 3);
            let t4 = random_tree_with_leaves(12, 4, &mut rng);
            assert_eq!(t4.leaf_count(), 4);
        }
    }

    #[test]
    fn random_bi_arbs_have_both_kinds() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let t = random_bi_arborescence(9, &mut rng);
            let lp = t.leaf_partition();
            assert!(!lp.in_leaves.is_empty() && !lp.out_leaves.is_empty());
            assert!(t.bi_arborescence_root().is_some());
        }
    }
}
