//! Independent ground truth: backtracking containment, exhaustive
//! labeled-tournament sweeps, exact unavoidability, and the classical
//! counterexample battery.

use once_cell::sync::OnceCell;
use rayon::prelude::*;
use serde::Serialize;

use crate::embedding::Embedding;
use crate::enumerate::{tournament_count, tournament_from_mask};
use crate::error::{Error, Result};
use crate::tournament::Tournament;
use crate::tree::OrientedTree;

/// Bit budget for exhaustive sweeps: n(n-1)/2 must stay within this.
pub const DEFAULT_ENUM_CAP_BITS: usize = 28;

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceCell<rayon::ThreadPool> = OnceCell::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Ok(v) = std::env::var("UNAVOID_THREADS") {
            if let Ok(k) = v.parse::<usize>() {
                if k >= 1 {
                    b = b.num_threads(k);
                }
            }
        }
        b.build().expect("worker pool")
    })
}

/// Sound and complete backtracking search for an embedding of `a` in `t`.
/// Nodes are tried in BFS order from a maximum-degree node, vertices in
/// ascending id, pruning on arc consistency with already-placed neighbours.
/// `None` is a proof of non-containment.
pub fn brute_force_embed(a: &OrientedTree, t: &Tournament) -> Option<Embedding> {
    let n = a.node_count();
    let m = t.order();
    if n > m {
        return None;
    }
    // BFS order from a max-degree node (ties: smallest id)
    let start = (0..n).max_by_key(|&u| (a.degree(u), std::cmp::Reverse(u))).unwrap_or(0);
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        let mut nbrs: Vec<usize> =
            a.out_nbrs(u).iter().chain(a.in_nbrs(u)).copied().filter(|&v| !seen[v]).collect();
        nbrs.sort_unstable();
        for v in nbrs {
            seen[v] = true;
            queue.push_back(v);
        }
    }
    // for each node, the neighbours that appear earlier in the order
    let mut rank = vec![0usize; n];
    for (i, &u) in order.iter().enumerate() {
        rank[u] = i;
    }
    let mut checks: Vec<Vec<(usize, bool)>> = vec![vec![]; n]; // (earlier node, arc points node->earlier?)
    for &(u, v) in a.arcs() {
        if rank[u] < rank[v] {
            checks[v].push((u, false)); // arc u -> v, u earlier
        } else {
            checks[u].push((v, true)); // arc u -> v, v earlier: points from u to earlier v
        }
    }

    let mut img = vec![usize::MAX; n];
    let mut used = vec![false; m];
    fn rec(
        depth: usize,
        order: &[usize],
        checks: &[Vec<(usize, bool)>],
        t: &Tournament,
        img: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let node = order[depth];
        'vertex: for v in 0..t.order() {
            if used[v] {
                continue;
            }
            for &(earlier, outward) in &checks[node] {
                let w = img[earlier];
                let ok = if outward { t.has_arc(v, w) } else { t.has_arc(w, v) };
                if !ok {
                    continue 'vertex;
                }
            }
            img[node] = v;
            used[v] = true;
            if rec(depth + 1, order, checks, t, img, used) {
                return true;
            }
            used[v] = false;
            img[node] = usize::MAX;
        }
        false
    }
    if rec(0, &order, &checks, t, &mut img, &mut used) {
        Some(Embedding::from_pairs(n, (0..n).map(|u| (u, img[u]))).expect("search output injective"))
    } else {
        None
    }
}

/// Report of an exhaustive sweep over all labeled tournaments of one order.
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub order: usize,
    pub examined: u64,
    /// Bitmasks of tournaments that do not contain the tree.
    pub failures: Vec<u64>,
}

impl SweepReport {
    pub fn unavoidable(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Tests the tree against every labeled tournament of order `n` (bitmask
/// enumeration, lexicographic pair order). Labeled enumeration suffices
/// because containment is isomorphism-invariant.
pub fn contains_all(a: &OrientedTree, n: usize, cap_bits: usize) -> Result<SweepReport> {
    let bits = n * (n - 1) / 2;
    if bits > cap_bits.min(63) {
        return Err(Error::Precondition(format!(
            "order {n} needs {bits} bits, cap is {}",
            cap_bits.min(63)
        )));
    }
    let total = tournament_count(n);
    let chunk = 1u64 << bits.saturating_sub(8).min(16);
    let ranges: Vec<(u64, u64)> =
        (0..total).step_by(chunk as usize).map(|lo| (lo, (lo + chunk).min(total))).collect();
    let failures: Vec<u64> = pool().install(|| {
        ranges
            .par_iter()
            .map(|&(lo, hi)| {
                let mut bad = vec![];
                for mask in lo..hi {
                    let t = tournament_from_mask(n, mask);
                    if brute_force_embed(a, &t).is_none() {
                        bad.push(mask);
                    }
                }
                bad
            })
            .reduce(Vec::new, |mut acc, mut x| {
                acc.append(&mut x);
                acc
            })
    });
    let mut failures = failures;
    failures.sort_unstable();
    Ok(SweepReport { order: n, examined: total, failures })
}

/// Smallest `n >= |A|` such that the tree is n-unavoidable, within the cap.
/// First success is returned; unavoidability is monotone in `n`.
pub fn unvd_exact(a: &OrientedTree, cap: usize, cap_bits: usize) -> Result<usize> {
    for n in a.node_count()..=cap {
        if contains_all(a, n, cap_bits)?.unavoidable() {
            return Ok(n);
        }
    }
    Err(Error::NoGuarantee(format!("unavoidability exceeds cap {cap}")))
}

/// One classical counterexample check.
#[derive(Clone, Debug, Serialize)]
pub struct GrunbaumLine {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrunbaumReport {
    pub lines: Vec<GrunbaumLine>,
    pub all_ok: bool,
}

/// The antidirected-path battery: the order-3 path misses the directed
/// 3-cycle, the order-5 path misses the regular tournament of order 5, the
/// order-7 path misses the Paley tournament of order 7, and the order-3
/// exception has unavoidability exactly 4.
pub fn grunbaum_checks() -> Result<GrunbaumReport> {
    let mut lines = vec![];
    let cases: [(&str, OrientedTree, Tournament); 3] = [
        (
            "antidirected P3 vs directed 3-cycle",
            OrientedTree::antidirected_path(3),
            Tournament::from_arcs(3, [(0, 1), (1, 2), (2, 0)])?,
        ),
        (
            "antidirected P5 vs regular tournament of order 5",
            OrientedTree::antidirected_path(5),
            Tournament::rotational(5, &[1, 2])?,
        ),
        (
            "antidirected P7 vs Paley tournament of order 7",
            OrientedTree::antidirected_path(7),
            Tournament::paley(7)?,
        ),
    ];
    for (name, tree, host) in cases {
        let found = brute_force_embed(&tree, &host);
        lines.push(GrunbaumLine {
            name: name.to_string(),
            expected: "not contained".into(),
            actual: if found.is_some() { "contained".into() } else { "not contained".into() },
            ok: found.is_none(),
        });
    }
    let u = unvd_exact(&OrientedTree::antidirected_path(3), 8, DEFAULT_ENUM_CAP_BITS)?;
    lines.push(GrunbaumLine {
        name: "unvd(antidirected P3)".into(),
        expected: "4".into(),
        actual: u.to_string(),
        ok: u == 4,
    });
    let all_ok = lines.iter().all(|l| l.ok);
    Ok(GrunbaumReport { lines, all_ok })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify_embedding;

    #[test]
    fn finds_paths_in_transitive() {
        let t = Tournament::transitive(5);
        for tree in [
            OrientedTree::directed_path(5),
            OrientedTree::antidirected_path(5),
            OrientedTree::out_star(4),
        ] {
            let e = brute_force_embed(&tree, &t).expect("transitive hosts everything small");
            assert!(verify_embedding(&tree, &t, &e).unwrap().is_empty());
        }
    }

    #[test]
    fn grunbaum_battery() {
        let r = grunbaum_checks().unwrap();
        assert!(r.all_ok, "{r:?}");
    }

    #[test]
    fn star_fails_on_cycles() {
        // S+_3 at n=3: failures are exactly the two labeled 3-cycles
        let star = OrientedTree::out_star(3);
        let rep = contains_all(&star, 3, DEFAULT_ENUM_CAP_BITS).unwrap();
        assert_eq!(rep.examined, 8);
        assert_eq!(rep.failures, vec![2, 5]);
    }

    #[test]
    fn directed_p3_unavoidable_at_3() {
        let p3 = OrientedTree::directed_path(3);
        assert!(contains_all(&p3, 3, DEFAULT_ENUM_CAP_BITS).unwrap().unavoidable());
    }

    #[test]
    fn exact_unavoidabilities() {
        assert_eq!(unvd_exact(&OrientedTree::directed_path(4), 8, 28).unwrap(), 4);
        assert_eq!(unvd_exact(&OrientedTree::out_star(3), 8, 28).unwrap(), 4);
        assert_eq!(unvd_exact(&OrientedTree::antidirected_path(3), 8, 28).unwrap(), 4);
    }

    #[test]
    fn antidirected_p5_failures_are_one_class() {
        // failing masks at n=5 are exactly the labeled copies of the regular
        // tournament of order 5; its automorphism group is the 5 rotations,
        // so the labeled class has 5!/5 = 24 members
        let p5 = OrientedTree::antidirected_path(5);
        let rep = contains_all(&p5, 5, DEFAULT_ENUM_CAP_BITS).unwrap();
        let r5 = Tournament::rotational(5, &[1, 2]).unwrap();
        let class: Vec<u64> = (0..tournament_count(5))
            .filter(|&mask| tournaments_isomorphic(&tournament_from_mask(5, mask), &r5))
            .collect();
        assert_eq!(class.len(), 24);
        assert_eq!(rep.failures, class);
    }

    fn tournaments_isomorphic(a: &Tournament, b: &Tournament) -> bool {
        let n = a.order();
        if n != b.order() {
            return false;
        }
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            if (0..n).all(|u| (0..n).all(|v| u == v || a.has_arc(u, v) == b.has_arc(perm[u], perm[v]))) {
                return true;
            }
            if !next_permutation(&mut perm) {
                return false;
            }
        }
    }

    fn next_permutation(p: &mut [usize]) -> bool {
        let n = p.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }

    #[test]
    fn cap_respected() {
        let p3 = OrientedTree::directed_path(3);
        assert!(contains_all(&p3, 9, DEFAULT_ENUM_CAP_BITS).is_err());
    }
}
