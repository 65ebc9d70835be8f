//! Greedy arborescence embedding and its helper lemmas.
//!
//! The central procedure embeds an out-arborescence with n nodes and k
//! out-leaves into any tournament of order at least n+k-1, with the root on
//! the first vertex of a local median order: scan the order left to right;
//! at every hit vertex, hand the first not-yet-hit out-neighbours to the
//! sons of its preimage. Skipped vertices are "failed"; at most k-1 of them
//! occur before the last hit vertex, and each can be matched injectively to
//! an out-leaf embedded earlier.
//!
//! On top of the same scan live the out-leaf extension step for
//! sigma-forward embeddings, the sigma-F-nice embedding that places a rooted
//! tree around the centre of an odd window while dodging a forbidden set,
//! and the multi-root forest embedding that pins arborescence roots at
//! chosen positions via an augmented host.

use crate::bits;
use crate::embedding::Embedding;
use crate::error::{Error, FailureDump, Result};
use crate::median::{check_m2, Ordering};
use crate::tournament::Tournament;
use crate::tree::{OrientedTree, RootedTree};

/// Outcome of the greedy scan.
#[derive(Clone, Debug)]
pub struct GreedyTrace {
    pub embedding: Embedding,
    /// Vertices skipped while unhit before the last hit vertex, in order.
    pub failed: Vec<usize>,
    /// For each failed vertex, an out-leaf whose image precedes it.
    pub leaf_injection: Vec<(usize, usize)>,
    /// Position (in the ordering) of the last hit vertex.
    pub last_hit_position: usize,
}

/// A set of vertices to avoid, with the budget it was sized for.
#[derive(Clone, Debug, Default)]
pub struct ForbiddenSet {
    vertices: Vec<usize>,
    capacity: usize,
}

impl ForbiddenSet {
    pub fn new(mut vertices: Vec<usize>, capacity: usize) -> Result<Self> {
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.len() > capacity {
            return Err(Error::Precondition(format!(
                "forbidden set has {} vertices, capacity {capacity}",
                vertices.len()
            )));
        }
        Ok(ForbiddenSet { vertices, capacity })
    }

    pub fn empty() -> Self {
        ForbiddenSet::default()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }
}

fn dump(t: &Tournament, tree: &OrientedTree, sigma: &Ordering, context: String) -> FailureDump {
    FailureDump {
        tournament: t.to_file_text(),
        tree: tree.to_file_text(),
        ordering: sigma.perm().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
        context,
    }
}

/// Out-leaf count used in the n+k-1 bound; a single node counts as 1.
pub fn arb_out_leaves(arb: &RootedTree) -> usize {
    arb.out_leaf_count()
}

// ---------------------------------------------------------------------------
// Core greedy scan
// ---------------------------------------------------------------------------

pub(crate) struct ScanState {
    /// preimage node per position, if hit
    pub hit: Vec<Option<usize>>,
    /// node -> position
    pub image_pos: Vec<Option<usize>>,
}

/// Runs the greedy scan over `sigma`. `assign` maps a batch of sons to the
/// batch of captured positions (both in engine order: sons as given,
/// positions ascending) and returns the chosen pairing.
pub(crate) fn greedy_scan(
    arb: &RootedTree,
    t: &Tournament,
    sigma: &Ordering,
    mut assign: impl FnMut(usize, &[usize], &[usize], &ScanState) -> Vec<(usize, usize)>,
) -> Result<ScanState> {
    let m = t.order();
    let n = arb.node_count();
    let mut st = ScanState { hit: vec![None; m], image_pos: vec![None; n] };
    st.hit[0] = Some(arb.root());
    st.image_pos[arb.root()] = Some(0);
    let mut assigned = 1usize;
    let mut i = 0;
    while i < m && assigned < n {
        let Some(node) = st.hit[i] else {
            i += 1;
            continue;
        };
        let sons: Vec<usize> =
            arb.sons(node).iter().copied().filter(|&s| st.image_pos[s].is_none()).collect();
        if sons.is_empty() {
            i += 1;
            continue;
        }
        let mut spots = Vec::with_capacity(sons.len());
        let vi = sigma.vertex_at(i);
        for j in (i + 1)..m {
            if st.hit[j].is_none() && t.has_arc(vi, sigma.vertex_at(j)) {
                spots.push(j);
                if spots.len() == sons.len() {
                    break;
                }
            }
        }
        if spots.len() < sons.len() {
            return Err(Error::internal(
                "greedy ran out of free out-neighbours (contradicts the arborescence theorem)",
                dump(
                    t,
                    arb.tree(),
                    sigma,
                    format!("node {node} at position {i} needs {} spots, found {}", sons.len(), spots.len()),
                ),
            ));
        }
        for (son, pos) in assign(node, &sons, &spots, &st) {
            debug_assert!(st.hit[pos].is_none() && st.image_pos[son].is_none());
            st.hit[pos] = Some(son);
            st.image_pos[son] = Some(pos);
            assigned += 1;
        }
        i += 1;
    }
    if assigned < n {
        return Err(Error::internal(
            "greedy finished the scan with unembedded nodes (contradicts the arborescence theorem)",
            dump(t, arb.tree(), sigma, format!("assigned {assigned} of {n} nodes")),
        ));
    }
    Ok(st)
}

/// Default son-to-vertex policy: larger subtrees to earlier vertices, ties by
/// node id.
pub(crate) fn default_assign(
    sizes: &[usize],
) -> impl FnMut(usize, &[usize], &[usize], &ScanState) -> Vec<(usize, usize)> + '_ {
    move |_father, sons, spots, _st| {
        let mut order: Vec<usize> = sons.to_vec();
        order.sort_by_key(|&s| (std::cmp::Reverse(sizes[s]), s));
        order.into_iter().zip(spots.iter().copied()).collect()
    }
}

fn trace_from_scan(arb: &RootedTree, t: &Tournament, sigma: &Ordering, st: &ScanState) -> Result<GreedyTrace> {
    let n = arb.node_count();
    let mut embedding = Embedding::new(n);
    for node in 0..n {
        embedding.set(node, sigma.vertex_at(st.image_pos[node].expect("total")));
    }
    let last_hit = (0..st.hit.len()).rev().find(|&p| st.hit[p].is_some()).expect("root is hit");
    let failed_positions: Vec<usize> =
        (0..last_hit).filter(|&p| st.hit[p].is_none()).collect();
    let failed: Vec<usize> = failed_positions.iter().map(|&p| sigma.vertex_at(p)).collect();

    // Out-leaves of the arborescence, claimed greedily per failed vertex in
    // sigma order: pick the smallest-id unclaimed out-leaf embedded inside
    // (l_i, i], where l_i is the last position whose preimage is still
    // active (has a son embedded beyond i).
    let is_out_leaf: Vec<bool> = (0..n).map(|u| arb.sons(u).is_empty()).collect();
    let mut claimed = vec![false; n];
    let mut leaf_injection = Vec::with_capacity(failed_positions.len());
    for &p in &failed_positions {
        let mut ell = None;
        'outer: for l in (0..p).rev() {
            if let Some(x) = st.hit[l] {
                for &s in arb.sons(x) {
                    if st.image_pos[s].expect("total") > p {
                        ell = Some(l);
                        break 'outer;
                    }
                }
            }
        }
        let lo = ell.map(|l| l + 1).unwrap_or(0);
        let pick = (0..n)
            .filter(|&u| is_out_leaf[u] && !claimed[u])
            .filter(|&u| {
                let q = st.image_pos[u].expect("total");
                q >= lo && q <= p
            })
            .min();
        let Some(leaf) = pick else {
            return Err(Error::internal(
                "failed-vertex injection has no free out-leaf (claim violated)",
                dump(t, arb.tree(), sigma, format!("failed position {p}, interval starts at {lo}")),
            ));
        };
        claimed[leaf] = true;
        leaf_injection.push((sigma.vertex_at(p), leaf));
    }

    let k = arb.out_leaf_count();
    if failed.len() + 1 > k {
        return Err(Error::internal(
            "more than k-1 failed vertices (contradicts the arborescence theorem)",
            dump(t, arb.tree(), sigma, format!("failed {} k {k}", failed.len())),
        ));
    }
    Ok(GreedyTrace { embedding, failed, leaf_injection, last_hit_position: last_hit })
}

/// Embeds an out-arborescence with its root on the first vertex of the
/// order. Requires a host of order at least n+k-1 and an (M2) ordering.
pub fn embed_out_arborescence(arb: &RootedTree, t: &Tournament, sigma: &Ordering) -> Result<GreedyTrace> {
    if !arb.is_out_arborescence() {
        return Err(Error::Precondition("input is not an out-arborescence".into()));
    }
    let (n, k) = (arb.node_count(), arb.out_leaf_count());
    if t.order() + 1 < n + k {
        return Err(Error::Precondition(format!(
            "host order {} below n+k-1 = {}",
            t.order(),
            n + k - 1
        )));
    }
    if !check_m2(t, sigma)?.is_empty() {
        return Err(Error::Precondition("ordering fails (M2)".into()));
    }
    let sizes = arb.subtree_sizes();
    let st = greedy_scan(arb, t, sigma, default_assign(&sizes))?;
    trace_from_scan(arb, t, sigma, &st)
}

/// Directional dual: embeds an in-arborescence with its root (the sink) on
/// the last vertex of the order. The trace's failed/injection data is
/// relative to the reversed order.
pub fn embed_in_arborescence(arb: &RootedTree, t: &Tournament, sigma: &Ordering) -> Result<GreedyTrace> {
    let rev_tree = arb.tree().reverse();
    let rev_arb = RootedTree::new(rev_tree, arb.root())?;
    let trace = embed_out_arborescence(&rev_arb, &t.reverse(), &sigma.reversed())?;
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Sigma-forward extension (out-leaf lemma)
// ---------------------------------------------------------------------------

/// `2*cnt(I) <= |I| + 1` for every terminal interval `I` of `0..len`, where
/// cnt counts image positions.
pub fn is_sigma_forward(image_positions: &[usize], len: usize) -> bool {
    let mut in_window = vec![false; len];
    for &p in image_positions {
        if p >= len {
            return false;
        }
        in_window[p] = true;
    }
    let mut cnt = 0usize;
    for t in (0..len).rev() {
        if in_window[t] {
            cnt += 1;
        }
        if 2 * cnt > len - t + 1 {
            return false;
        }
    }
    true
}

/// Extends a sigma-forward embedding of `tree - leaf` (which avoids the last
/// two vertices) by placing `leaf` on a free out-neighbour of its father's
/// image, later in the order. The result is sigma-forward on the full order.
pub fn extend_out_leaf(
    tree: &OrientedTree,
    leaf: usize,
    t: &Tournament,
    sigma: &Ordering,
    phi: &Embedding,
) -> Result<Embedding> {
    let p = t.order();
    if tree.out_degree(leaf) != 0 || tree.in_degree(leaf) != 1 {
        return Err(Error::Precondition(format!("node {leaf} is not an out-leaf")));
    }
    if phi.get(leaf).is_some() {
        return Err(Error::Precondition(format!("leaf {leaf} already embedded")));
    }
    let mut pos_of = vec![usize::MAX; t.order()];
    for (i, &v) in sigma.perm().iter().enumerate() {
        pos_of[v] = i;
    }
    let mut positions = vec![];
    for node in 0..tree.node_count() {
        if node == leaf {
            continue;
        }
        let Some(v) = phi.get(node) else {
            return Err(Error::Precondition(format!("node {node} unembedded; phi must cover tree - leaf")));
        };
        let q = pos_of[v];
        if q + 2 >= p {
            return Err(Error::Precondition(format!(
                "embedding touches one of the last two vertices (position {q})"
            )));
        }
        positions.push(q);
    }
    if p >= 2 && !is_sigma_forward(&positions, p - 2) {
        return Err(Error::Precondition("embedding of tree - leaf is not sigma-forward".into()));
    }
    for &(u, v) in tree.arcs() {
        if u == leaf || v == leaf {
            continue;
        }
        if !t.has_arc(phi.get(u).unwrap(), phi.get(v).unwrap()) {
            return Err(Error::Precondition(format!("phi breaks tree arc {u}->{v}")));
        }
    }

    let father = tree.in_nbrs(leaf)[0];
    let i = pos_of[phi.get(father).unwrap()];
    let taken: std::collections::HashSet<usize> = positions.iter().copied().collect();
    let spot = ((i + 1)..p).find(|&j| !taken.contains(&j) && t.has_arc(sigma.vertex_at(i), sigma.vertex_at(j)));
    let Some(j) = spot else {
        return Err(Error::internal(
            "no free out-neighbour for the out-leaf (contradicts the extension lemma)",
            dump(t, tree, sigma, format!("father at position {i}")),
        ));
    };
    let mut out = phi.clone();
    out.set(leaf, sigma.vertex_at(j));
    positions.push(j);
    debug_assert!(is_sigma_forward(&positions, p));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sigma-F-nice embedding around the centre of an odd window
// ---------------------------------------------------------------------------

/// Checks the sigma-F-nice inequality `2*cnt(I) <= |I| - 2|F cap I| + 1` on
/// every initial and terminal interval that contains at least one image.
///
/// Intervals without images are exempt: a pair of forbidden vertices sitting
/// alone at an end of the order already breaks the raw inequality no matter
/// what the embedding does, and the extension steps only ever consult
/// intervals anchored at an embedded vertex. With an empty forbidden set
/// this is the full sigma-nice condition.
pub fn f_nice_ok(image_positions: &[usize], forb_positions: &[usize], len: usize) -> bool {
    let mut img = vec![false; len];
    let mut forb = vec![false; len];
    for &p in image_positions {
        img[p] = true;
    }
    for &p in forb_positions {
        forb[p] = true;
    }
    let mut cnt = 0usize;
    let mut fc = 0usize;
    for t in (0..len).rev() {
        if img[t] {
            cnt += 1;
        }
        if forb[t] {
            fc += 1;
        }
        if cnt > 0 && 2 * cnt + 2 * fc > len - t + 1 {
            return false;
        }
    }
    cnt = 0;
    fc = 0;
    for t in 0..len {
        if img[t] {
            cnt += 1;
        }
        if forb[t] {
            fc += 1;
        }
        if cnt > 0 && 2 * cnt + 2 * fc > t + 2 {
            return false;
        }
    }
    true
}

/// Embeds a rooted tree in a host of exact order `4n + 4f - 3` with the root
/// at the centre vertex, avoiding the forbidden set, so that the result is
/// sigma-F-nice. `f` is the forbidden capacity and may be zero.
///
/// Rebuilds the tree leaf by leaf; each step works inside a centred window
/// whose half-width is the fixed point of `w = 2t + 2|F cap window| - 2` for
/// the current tree size `t`, so excluded forbidden vertices pay for the
/// extra margin.
pub fn embed_sigma_f_nice(
    arb: &RootedTree,
    t: &Tournament,
    sigma: &Ordering,
    forb: &ForbiddenSet,
) -> Result<Embedding> {
    let n = arb.node_count();
    let f = forb.capacity();
    let m = t.order();
    if m != 4 * n + 4 * f - 3 {
        return Err(Error::Precondition(format!(
            "host order {m} must be exactly 4n+4f-3 = {}",
            4 * n + 4 * f - 3
        )));
    }
    let center = (m - 1) / 2;
    if forb.contains(sigma.vertex_at(center)) {
        return Err(Error::Precondition("centre vertex is forbidden".into()));
    }
    if !check_m2(t, sigma)?.is_empty() {
        return Err(Error::Precondition("ordering fails (M2)".into()));
    }

    let mut pos_of = vec![usize::MAX; m];
    for (i, &v) in sigma.perm().iter().enumerate() {
        pos_of[v] = i;
    }
    let forb_pos: Vec<usize> = forb.vertices().iter().map(|&v| pos_of[v]).collect();
    let forb_words = bits::words_for(m.max(1));
    let mut forb_bits = vec![0u64; forb_words];
    for &p in &forb_pos {
        bits::set(&mut forb_bits, p);
    }
    let forb_in = |lo: usize, hi: usize| -> usize {
        (lo..=hi).filter(|&p| bits::get(&forb_bits, p)).count()
    };

    // Peel leaves down to the root, smallest id first.
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|u| arb.tree().degree(u)).collect();
    let mut peel = vec![];
    for _ in 1..n {
        let leaf = (0..n)
            .filter(|&u| alive[u] && u != arb.root() && deg[u] <= 1)
            .min()
            .expect("a removable leaf exists");
        alive[leaf] = false;
        peel.push(leaf);
        for &w in arb.tree().out_nbrs(leaf).iter().chain(arb.tree().in_nbrs(leaf)) {
            if alive[w] {
                deg[w] -= 1;
            }
        }
    }

    // Rebuild in reverse order inside growing fixed-point windows.
    let mut phi_pos: Vec<Option<usize>> = vec![None; n];
    phi_pos[arb.root()] = Some(center);
    let mut hit = vec![false; m];
    hit[center] = true;
    let mut size = 1usize;
    for &node in peel.iter().rev() {
        size += 1;
        // fixed point of w = 2*size + 2*|F cap centred(w)| - 2
        let mut w = 2 * size - 2;
        let mut iters = 0usize;
        loop {
            let f_in = forb_in(center.saturating_sub(w), (center + w).min(m - 1));
            let w2 = 2 * size + 2 * f_in - 2;
            iters += 1;
            if w2 == w {
                break;
            }
            w = w2;
            if iters > f + 1 {
                return Err(Error::internal(
                    "window fixed point did not stabilise within f+1 iterations",
                    dump(t, arb.tree(), sigma, format!("size {size}, w {w}")),
                ));
            }
        }
        debug_assert!(center >= w && center + w < m);

        // the single neighbour already embedded
        let nb = arb
            .tree()
            .out_nbrs(node)
            .iter()
            .chain(arb.tree().in_nbrs(node))
            .copied()
            .find(|&u| phi_pos[u].is_some())
            .expect("rebuild order keeps the tree connected");
        let bpos = phi_pos[nb].expect("neighbour embedded");
        let outward = arb.tree().has_arc(nb, node);
        let spot = if outward {
            ((bpos + 1)..=(center + w)).find(|&j| {
                !hit[j]
                    && !bits::get(&forb_bits, j)
                    && t.has_arc(sigma.vertex_at(bpos), sigma.vertex_at(j))
            })
        } else {
            ((center - w)..bpos).rev().find(|&j| {
                !hit[j]
                    && !bits::get(&forb_bits, j)
                    && t.has_arc(sigma.vertex_at(j), sigma.vertex_at(bpos))
            })
        };
        let Some(j) = spot else {
            return Err(Error::internal(
                "no free neighbour inside the nice window (contradicts the nice-embedding lemma)",
                dump(t, arb.tree(), sigma, format!("node {node} near position {bpos}, window +/-{w}")),
            ));
        };
        phi_pos[node] = Some(j);
        hit[j] = true;

        // niceness within the current window
        let lo = center - w;
        let imgs: Vec<usize> =
            phi_pos.iter().filter_map(|p| p.map(|q| q - lo)).collect();
        let forbs: Vec<usize> = forb_pos.iter().filter(|&&q| q >= lo && q <= center + w).map(|&q| q - lo).collect();
        if !f_nice_ok(&imgs, &forbs, 2 * w + 1) {
            return Err(Error::internal(
                "nice inequality violated inside the working window",
                dump(t, arb.tree(), sigma, format!("node {node} at window +/-{w}")),
            ));
        }
    }

    // final: nice over the whole host
    let imgs: Vec<usize> = phi_pos.iter().map(|p| p.expect("total")).collect();
    if !f_nice_ok(&imgs, &forb_pos, m) {
        return Err(Error::internal(
            "final embedding is not sigma-F-nice over the full host",
            dump(t, arb.tree(), sigma, "full-window check".into()),
        ));
    }
    let mut out = Embedding::new(n);
    for (node, p) in phi_pos.iter().enumerate() {
        out.set(node, sigma.vertex_at(p.expect("total")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::median::local_median_order;
    use crate::verify_embedding;

    fn rooted(arcs: Vec<(usize, usize)>, n: usize, root: usize) -> RootedTree {
        RootedTree::new(OrientedTree::from_arcs(n, arcs).unwrap(), root).unwrap()
    }

    #[test]
    fn p3_into_c3() {
        let arb = rooted(vec![(0, 1), (1, 2)], 3, 0);
        let c3 = Tournament::from_arcs(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let sigma = Ordering::new(vec![0, 1, 2], 3).unwrap();
        let trace = embed_out_arborescence(&arb, &c3, &sigma).unwrap();
        assert_eq!(trace.embedding.get(0), Some(0));
        assert_eq!(trace.embedding.get(1), Some(1));
        assert_eq!(trace.embedding.get(2), Some(2));
        assert!(trace.failed.is_empty());
    }

    #[test]
    fn star_into_transitive() {
        let arb = rooted(vec![(0, 1), (0, 2)], 3, 0);
        let t = Tournament::transitive(4);
        let sigma = Ordering::identity(4);
        let trace = embed_out_arborescence(&arb, &t, &sigma).unwrap();
        assert_eq!(trace.embedding.get(0), Some(0));
        let mut leaves = vec![trace.embedding.get(1).unwrap(), trace.embedding.get(2).unwrap()];
        leaves.sort();
        assert_eq!(leaves, vec![1, 2]);
        assert!(trace.failed.is_empty());
    }

    #[test]
    fn directed_path_never_fails() {
        // Redei re-derived: P_n embeds in any n-tournament with zero failed.
        for seed in 0..40 {
            let n = 2 + (seed as usize) % 9;
            let t = Tournament::random(n, seed);
            let sigma = local_median_order(&t);
            let arcs = (0..n - 1).map(|i| (i, i + 1)).collect();
            let arb = rooted(arcs, n, 0);
            let trace = embed_out_arborescence(&arb, &t, &sigma).unwrap();
            assert!(trace.failed.is_empty(), "n={n} seed={seed}");
            assert_eq!(trace.embedding.get(0), Some(sigma.vertex_at(0)));
            assert!(verify_embedding(arb.tree(), &t, &trace.embedding).unwrap().is_empty());
        }
    }

    #[test]
    fn trace_invariants_random() {
        for seed in 0..60 {
            let n = 2 + (seed as usize) % 7;
            let tree = OrientedTree::random(n, seed ^ 0xbeef);
            // orient away from node 0 to get an out-arborescence
            let mut arcs = vec![];
            let r = RootedTree::new(tree.clone(), 0).unwrap();
            for v in 1..n {
                arcs.push((r.father(v).unwrap(), v));
            }
            let arb = rooted(arcs, n, 0);
            let k = arb.out_leaf_count();
            let m = n + k - 1;
            let t = Tournament::random(m, seed);
            let sigma = local_median_order(&t);
            let trace = embed_out_arborescence(&arb, &t, &sigma).unwrap();
            assert!(trace.failed.len() + 1 <= k);
            assert_eq!(trace.leaf_injection.len(), trace.failed.len());
            let mut pos_of = vec![0; m];
            for (i, &v) in sigma.perm().iter().enumerate() {
                pos_of[v] = i;
            }
            let mut used = std::collections::HashSet::new();
            for &(fv, leaf) in &trace.leaf_injection {
                assert!(used.insert(leaf), "injection not injective");
                let leaf_img = trace.embedding.get(leaf).unwrap();
                assert!(pos_of[leaf_img] < pos_of[fv], "leaf image must precede failed vertex");
            }
            assert!(verify_embedding(arb.tree(), &t, &trace.embedding).unwrap().is_empty());
        }
    }

    #[test]
    fn in_arborescence_dual() {
        let arb = rooted(vec![(1, 0), (2, 0)], 3, 0); // in-star
        let t = Tournament::random(4, 9);
        let sigma = local_median_order(&t);
        let trace = embed_in_arborescence(&arb, &t, &sigma).unwrap();
        assert_eq!(trace.embedding.get(0), Some(sigma.vertex_at(3)));
        assert!(verify_embedding(arb.tree(), &t, &trace.embedding).unwrap().is_empty());
    }

    #[test]
    fn extension_grows_a_path() {
        // repeated application builds a directed path from v_1 in any host
        for seed in 0..20 {
            let p = 9;
            let t = Tournament::random(p, seed);
            let sigma = local_median_order(&t);
            let steps = (p - 1) / 2;
            // build path trees of increasing size and extend one leaf at a time
            let mut phi = Embedding::new(steps + 1);
            phi.set(0, sigma.vertex_at(0));
            for s in 1..=steps {
                let tree = OrientedTree::directed_path(steps + 1);
                // phi currently covers 0..s of the path; extend node s
                let sub = OrientedTree::directed_path(s + 1);
                let host_len = 2 * s + 1 + 2; // window large enough, grows by 2
                let window: Vec<usize> = sigma.perm()[..host_len.min(p)].to_vec();
                let host = t.induced(&window);
                let sub_sigma = Ordering::identity(window.len());
                let mut sub_phi = Embedding::new(s + 1);
                for u in 0..s {
                    let gpos = sigma.position_of(phi.get(u).unwrap());
                    sub_phi.set(u, gpos);
                }
                let ext = extend_out_leaf(&sub, s, &host, &sub_sigma, &sub_phi).unwrap();
                phi.set(s, sigma.vertex_at(ext.get(s).unwrap()));
                let _ = tree;
            }
            // check the arcs
            for s in 0..steps {
                assert!(t.has_arc(phi.get(s).unwrap(), phi.get(s + 1).unwrap()));
            }
        }
    }

    #[test]
    fn extend_requires_forwardness() {
        let tree = OrientedTree::directed_path(2);
        let t = Tournament::transitive(5);
        let sigma = Ordering::identity(5);
        let mut phi = Embedding::new(2);
        phi.set(0, 4); // touches the last two vertices
        assert!(matches!(extend_out_leaf(&tree, 1, &t, &sigma, &phi), Err(Error::Precondition(_))));
    }

    #[test]
    fn nice_base_case() {
        // n=1, f=1: host order 5, root at the centre
        let arb = RootedTree::new(OrientedTree::single_node(), 0).unwrap();
        for seed in 0..10 {
            let t = Tournament::random(5, seed);
            let sigma = local_median_order(&t);
            for fv in 0..5 {
                if fv == sigma.vertex_at(2) {
                    continue;
                }
                let forb = ForbiddenSet::new(vec![fv], 1).unwrap();
                let phi = embed_sigma_f_nice(&arb, &t, &sigma, &forb).unwrap();
                assert_eq!(phi.get(0), Some(sigma.vertex_at(2)));
            }
        }
    }

    #[test]
    fn nice_single_arc() {
        let arb = rooted(vec![(0, 1)], 2, 0);
        for seed in 0..20 {
            let t = Tournament::random(9, seed); // 4*2+4*1-3
            let sigma = local_median_order(&t);
            let center = sigma.vertex_at(4);
            let fv = (0..9).find(|&v| v != center).unwrap();
            let forb = ForbiddenSet::new(vec![fv], 1).unwrap();
            let phi = embed_sigma_f_nice(&arb, &t, &sigma, &forb).unwrap();
            assert_eq!(phi.get(0), Some(center));
            assert!(t.has_arc(phi.get(0).unwrap(), phi.get(1).unwrap()));
            assert_ne!(phi.get(1), Some(fv));
        }
    }

    #[test]
    fn nice_path_with_forbidden() {
        // n=3 path, f=2 on random hosts of order 17
        for seed in 0..100u64 {
            let arb = rooted(vec![(0, 1), (1, 2)], 3, 0);
            let t = Tournament::random(17, seed);
            let sigma = local_median_order(&t);
            let center = sigma.vertex_at(8);
            let mut fv = vec![];
            for v in 0..17 {
                if v != center && fv.len() < 2 {
                    fv.push(v);
                }
            }
            let forb = ForbiddenSet::new(fv.clone(), 2).unwrap();
            let phi = embed_sigma_f_nice(&arb, &t, &sigma, &forb).unwrap();
            assert!(verify_embedding(arb.tree(), &t, &phi).unwrap().is_empty());
            for node in 0..3 {
                assert!(!fv.contains(&phi.get(node).unwrap()));
            }
        }
    }

    #[test]
    fn nice_rejects_bad_arity() {
        let arb = rooted(vec![(0, 1)], 2, 0);
        let t = Tournament::random(8, 0);
        let sigma = local_median_order(&t);
        assert!(matches!(
            embed_sigma_f_nice(&arb, &t, &sigma, &ForbiddenSet::empty()),
            Err(Error::Precondition(_))
        ));
    }
}
