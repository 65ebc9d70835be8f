//! Embedding general oriented trees: root metrics, the equivalent
//! arborescence, the few-leaves procedure, leaf clusters and the heart, and
//! the three-phase many-leaves procedure with its bi-arborescence shortcut.

use serde::Serialize;

use crate::arbo::{self, ForbiddenSet};
use crate::embedding::Embedding;
use crate::error::{Error, FailureDump, Result};
use crate::median::{check_m2, local_median_order, Ordering};
use crate::tournament::Tournament;
use crate::tree::{OrientedTree, RootedTree};
use crate::verify_embedding;

/// One component of the upward or downward forest, in the host tree's ids.
#[derive(Clone, Debug)]
pub struct ForestComponent {
    pub nodes: Vec<usize>,
    pub arcs: Vec<(usize, usize)>,
    /// For a downward component: its sink (the node nearest the root).
    /// For an upward component: its source.
    pub anchor: usize,
    /// In-leaves (downward) or out-leaves (upward) of the component.
    pub leaves: Vec<usize>,
}

/// Gamma and beta root metrics plus the forests they are computed from.
#[derive(Clone, Debug)]
pub struct RootMetrics {
    pub gamma_up: usize,
    pub gamma_down: usize,
    pub beta_up: usize,
    pub beta_down: usize,
    pub components_up: Vec<ForestComponent>,
    pub components_down: Vec<ForestComponent>,
}

fn forest_components(rooted: &RootedTree, downward: bool) -> Vec<ForestComponent> {
    let tree = rooted.tree();
    let n = tree.node_count();
    // union the endpoints of the selected arc class
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    let selected: Vec<(usize, usize)> = tree
        .arcs()
        .iter()
        .copied()
        .filter(|&(u, v)| rooted.is_upward(u, v) != downward)
        .collect();
    for &(u, v) in &selected {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            parent[ru] = rv;
        }
    }
    let mut groups: std::collections::BTreeMap<usize, ForestComponent> = Default::default();
    for &(u, v) in &selected {
        let r = find(&mut parent, u);
        let e = groups.entry(r).or_insert_with(|| ForestComponent {
            nodes: vec![],
            arcs: vec![],
            anchor: usize::MAX,
            leaves: vec![],
        });
        e.arcs.push((u, v));
    }
    for comp in groups.values_mut() {
        let mut nodes: Vec<usize> = comp.arcs.iter().flat_map(|&(u, v)| [u, v]).collect();
        nodes.sort_unstable();
        nodes.dedup();
        // degrees within the component
        let mut indeg = std::collections::HashMap::new();
        let mut outdeg = std::collections::HashMap::new();
        for &(u, v) in &comp.arcs {
            *outdeg.entry(u).or_insert(0usize) += 1;
            *indeg.entry(v).or_insert(0usize) += 1;
        }
        if downward {
            // in-arborescence: anchor = unique node with out-degree 0,
            // leaves = sources (in-degree 0)
            comp.anchor = *nodes.iter().find(|&&x| !outdeg.contains_key(&x)).expect("sink exists");
            comp.leaves = nodes.iter().copied().filter(|x| !indeg.contains_key(x)).collect();
        } else {
            comp.anchor = *nodes.iter().find(|&&x| !indeg.contains_key(&x)).expect("source exists");
            comp.leaves = nodes.iter().copied().filter(|x| !outdeg.contains_key(x)).collect();
        }
        comp.nodes = nodes;
    }
    groups.into_values().collect()
}

/// Gamma and beta metrics of `a` rooted at `r`.
pub fn root_metrics(a: &OrientedTree, r: usize) -> Result<RootMetrics> {
    if r >= a.node_count() {
        return Err(Error::Precondition(format!("root {r} out of range")));
    }
    let rooted = RootedTree::new(a.clone(), r)?;
    let up = forest_components(&rooted, false);
    let down = forest_components(&rooted, true);
    let gamma_up: usize = up.iter().map(|c| c.nodes.len() + c.leaves.len() - 2).sum();
    let gamma_down: usize = down.iter().map(|c| c.nodes.len() + c.leaves.len() - 2).sum();
    let lp = a.leaf_partition();
    let beta_up: usize =
        up.iter().map(|c| 3 * c.nodes.len() - 3).sum::<usize>() + 2 * lp.out_leaves.len();
    let beta_down: usize =
        down.iter().map(|c| 3 * c.nodes.len() - 3).sum::<usize>() + 2 * lp.in_leaves.len();
    Ok(RootMetrics { gamma_up, gamma_down, beta_up, beta_down, components_up: up, components_down: down })
}

/// `min_r min(gamma_up, gamma_down)`.
pub fn min_gamma(a: &OrientedTree) -> usize {
    (0..a.node_count())
        .map(|r| {
            let m = root_metrics(a, r).expect("valid root");
            m.gamma_up.min(m.gamma_down)
        })
        .min()
        .expect("nonempty tree")
}

/// Picks a root attaining `min_r min(gamma_up, gamma_down)`; when only the
/// upward side attains it the tree must be reversed first (flag). After the
/// optional reversal the root has in-degree 0 and gamma_down equal to the
/// minimum.
pub fn choose_root_few_leaves(a: &OrientedTree) -> Result<(usize, bool)> {
    if a.node_count() < 2 {
        return Err(Error::Precondition("need at least two nodes".into()));
    }
    let metrics: Vec<RootMetrics> =
        (0..a.node_count()).map(|r| root_metrics(a, r).expect("valid root")).collect();
    let best = metrics.iter().map(|m| m.gamma_up.min(m.gamma_down)).min().unwrap();
    if let Some(r) = (0..a.node_count()).find(|&r| metrics[r].gamma_down == best) {
        if a.in_degree(r) != 0 {
            return Err(Error::Internal {
                msg: "gamma-minimal root has an in-neighbour".into(),
                dump: Box::new(FailureDump {
                    tournament: String::new(),
                    tree: a.to_file_text(),
                    ordering: String::new(),
                    context: format!("root {r}, gamma_down {best}"),
                }),
            });
        }
        return Ok((r, false));
    }
    let r = (0..a.node_count())
        .find(|&r| metrics[r].gamma_up == best)
        .expect("minimum attained on some side");
    // in the reversed tree this root has gamma_down = best and in-degree 0
    if a.out_degree(r) != 0 {
        return Err(Error::Internal {
            msg: "gamma-minimal root has an out-neighbour on the reversed side".into(),
            dump: Box::new(FailureDump {
                tournament: String::new(),
                tree: a.to_file_text(),
                ordering: String::new(),
                context: format!("root {r}, gamma_up {best}"),
            }),
        });
    }
    Ok((r, true))
}

// ---------------------------------------------------------------------------
// Equivalent arborescence
// ---------------------------------------------------------------------------

/// One downward component turned into a son block of its sink's father.
#[derive(Clone, Debug)]
pub struct ArbBlock {
    pub father: usize,
    pub comp: ForestComponent,
    /// Fresh padding nodes (ids in the arborescence, `>= n`).
    pub added: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct EquivalentArborescence {
    /// Out-arborescence on the original nodes plus padding; original node
    /// ids are preserved.
    pub arb: RootedTree,
    pub blocks: Vec<ArbBlock>,
}

/// Builds the equivalent arborescence of a rooted tree whose root has
/// in-degree 0: drop each downward component's arcs, and give its sink's
/// father an arc to every component node plus `|in-leaves| - 1` fresh
/// padding nodes.
pub fn equivalent_arborescence(rooted: &RootedTree) -> Result<EquivalentArborescence> {
    let a = rooted.tree();
    let n = a.node_count();
    if a.in_degree(rooted.root()) != 0 {
        return Err(Error::Precondition("root must have in-degree 0".into()));
    }
    let down = forest_components(rooted, true);
    let mut arcs: Vec<(usize, usize)> = a
        .arcs()
        .iter()
        .copied()
        .filter(|&(u, v)| rooted.is_upward(u, v))
        .collect();
    let mut next = n;
    let mut blocks = vec![];
    for comp in down {
        let sink = comp.anchor;
        let father = rooted.father(sink).expect("root is not in the downward forest");
        for &x in &comp.nodes {
            if x != sink {
                arcs.push((father, x));
            }
        }
        let mut added = vec![];
        for _ in 1..comp.leaves.len() {
            arcs.push((father, next));
            added.push(next);
            next += 1;
        }
        blocks.push(ArbBlock { father, comp, added });
    }
    let tree = OrientedTree::from_arcs(next, arcs)?;
    let arb = RootedTree::new(tree, rooted.root())?;
    if !arb.is_out_arborescence() {
        return Err(Error::Invariant("equivalent arborescence construction not an out-arborescence".into()));
    }
    // node-count identity and the out-leaf bound
    let expect_nodes: usize =
        n + blocks.iter().map(|b| b.comp.leaves.len() - 1).sum::<usize>();
    debug_assert_eq!(arb.node_count(), expect_nodes);
    let k = a.leaf_count();
    let leaf_bound: usize =
        k + blocks.iter().map(|b| b.comp.nodes.len() - 1).sum::<usize>();
    if arb.out_leaf_count() > leaf_bound {
        return Err(Error::Invariant(format!(
            "equivalent arborescence has {} out-leaves, bound {leaf_bound}",
            arb.out_leaf_count()
        )));
    }
    Ok(EquivalentArborescence { arb, blocks })
}

// ---------------------------------------------------------------------------
// Root-source embedding (few-leaves core)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct RootSourceOutcome {
    /// Embedding of the original tree.
    pub embedding: Embedding,
    /// Host vertices taken by padding nodes of the equivalent arborescence;
    /// reserved until the caller releases them.
    pub aux_vertices: Vec<usize>,
    /// Failed vertices of the underlying greedy run.
    pub failed: Vec<usize>,
    pub aprime_nodes: usize,
    pub aprime_out_leaves: usize,
}

/// Embeds a rooted tree whose root has in-degree 0 into a host of order at
/// least `n + k - 1 + gamma_down(root)`: run the greedy on the equivalent
/// arborescence with deferred son assignment, then re-embed each downward
/// component inside the vertex set its block received, by the dual greedy on
/// the induced subtournament.
pub fn embed_root_source(rooted: &RootedTree, t: &Tournament, sigma: &Ordering) -> Result<RootSourceOutcome> {
    let a = rooted.tree();
    let n = a.node_count();
    let k = a.leaf_count();
    let metrics = root_metrics(a, rooted.root())?;
    let bound = n + k - 1 + metrics.gamma_down;
    if t.order() < bound {
        return Err(Error::Precondition(format!(
            "host order {} below n+k-1+gamma_down = {bound}",
            t.order()
        )));
    }
    if !check_m2(t, sigma)?.is_empty() {
        return Err(Error::Precondition("ordering fails (M2)".into()));
    }
    let eq = equivalent_arborescence(rooted)?;
    if t.order() + 1 < eq.arb.node_count() + eq.arb.out_leaf_count() {
        return Err(Error::Invariant(
            "equivalent arborescence exceeds the host the gamma bound promised".into(),
        ));
    }

    // block lookup: node of A' -> block index (members are comp nodes except
    // the sink, plus the padding nodes; the sink is a plain son too)
    let mut block_of: std::collections::HashMap<usize, usize> = Default::default();
    for (bi, b) in eq.blocks.iter().enumerate() {
        for &x in &b.comp.nodes {
            block_of.insert(x, bi);
        }
        for &x in &b.added {
            block_of.insert(x, bi);
        }
    }

    let sizes = eq.arb.subtree_sizes();
    let blocks = &eq.blocks;
    let assign = |father: usize, sons: &[usize], spots: &[usize], _st: &arbo::ScanState| {
        // stage 1: default order, larger subtrees first
        let mut order: Vec<usize> = sons.to_vec();
        order.sort_by_key(|&s| (std::cmp::Reverse(sizes[s]), s));
        let mut pairs: Vec<(usize, usize)> = order.into_iter().zip(spots.iter().copied()).collect();
        // stage 2: reshuffle each block that hangs below this father
        for (bi, b) in blocks.iter().enumerate() {
            if b.father != father {
                continue;
            }
            let mut members: Vec<(usize, usize)> = pairs
                .iter()
                .copied()
                .filter(|&(s, _)| block_of.get(&s) == Some(&bi))
                .collect();
            if members.is_empty() {
                continue;
            }
            members.sort_by_key(|&(_, pos)| pos);
            let positions: Vec<usize> = members.iter().map(|&(_, pos)| pos).collect();
            let verts: Vec<usize> = positions.iter().map(|&p| sigma.vertex_at(p)).collect();
            // dual greedy embeds the component (an in-arborescence toward
            // its sink) inside the induced subtournament
            let sub = t.induced(&verts);
            let sub_sigma = local_median_order(&sub);
            let local_of: std::collections::HashMap<usize, usize> =
                b.comp.nodes.iter().enumerate().map(|(i, &x)| (x, i)).collect();
            let local_arcs: Vec<(usize, usize)> =
                b.comp.arcs.iter().map(|&(u, v)| (local_of[&u], local_of[&v])).collect();
            let local_tree = OrientedTree::from_arcs(b.comp.nodes.len(), local_arcs)
                .expect("component is a tree");
            let local = RootedTree::new(local_tree, local_of[&b.comp.anchor])
                .expect("component roots at its sink");
            let trace = arbo::embed_in_arborescence(&local, &sub, &sub_sigma)
                .expect("component fits its block by the arborescence theorem");
            let mut used = vec![false; positions.len()];
            let mut new_pairs = vec![];
            for (i, &x) in b.comp.nodes.iter().enumerate() {
                // the induced subtournament's vertex j is verts[j]
                let slot = trace.embedding.get(i).expect("component embedding total");
                used[slot] = true;
                new_pairs.push((x, positions[slot]));
            }
            let mut free = (0..positions.len()).filter(|&s| !used[s]);
            for &d in &b.added {
                let slot = free.next().expect("one leftover per padding node");
                new_pairs.push((d, positions[slot]));
            }
            // replace the block members' pairs
            pairs.retain(|&(s, _)| block_of.get(&s) != Some(&bi));
            pairs.extend(new_pairs);
        }
        pairs
    };

    let st = arbo::greedy_scan(&eq.arb, t, sigma, assign)?;
    if st.image_pos[rooted.root()] != Some(0) {
        return Err(Error::Invariant("root not on the first vertex".into()));
    }
    let mut embedding = Embedding::new(n);
    for node in 0..n {
        embedding.set(node, sigma.vertex_at(st.image_pos[node].expect("total")));
    }
    let aux_vertices: Vec<usize> = (n..eq.arb.node_count())
        .map(|x| sigma.vertex_at(st.image_pos[x].expect("total")))
        .collect();
    let last_hit = (0..st.hit.len()).rev().find(|&p| st.hit[p].is_some()).unwrap();
    let failed: Vec<usize> =
        (0..last_hit).filter(|&p| st.hit[p].is_none()).map(|p| sigma.vertex_at(p)).collect();

    // the combined map must already be a valid embedding of A
    let viols = verify_embedding(a, t, &embedding)?;
    if !viols.is_empty() {
        return Err(Error::internal(
            "root-source embedding failed verification",
            FailureDump {
                tournament: t.to_file_text(),
                tree: a.to_file_text(),
                ordering: sigma.perm().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                context: format!("{} violations, first: {}", viols.len(), viols[0]),
            },
        ));
    }
    Ok(RootSourceOutcome {
        embedding,
        aux_vertices,
        failed,
        aprime_nodes: eq.arb.node_count(),
        aprime_out_leaves: eq.arb.out_leaf_count(),
    })
}

/// `n + k - 1 + min_r min(gamma_up, gamma_down)`: the order at which the
/// few-leaves procedure is guaranteed.
pub fn few_leaves_bound(a: &OrientedTree) -> usize {
    a.node_count() + a.leaf_count() - 1 + min_gamma(a)
}

/// Few-leaves entry point: choose the root, reverse if the upward side wins,
/// and run the root-source procedure.
pub fn embed_few_leaves(a: &OrientedTree, t: &Tournament) -> Result<Embedding> {
    if a.node_count() < 2 {
        return Err(Error::Precondition("need at least two nodes".into()));
    }
    if t.order() < few_leaves_bound(a) {
        return Err(Error::Precondition(format!(
            "host order {} below the few-leaves bound {}",
            t.order(),
            few_leaves_bound(a)
        )));
    }
    let (root, reversed) = choose_root_few_leaves(a)?;
    let (eff_a, eff_t);
    if reversed {
        eff_a = a.reverse();
        eff_t = t.reverse();
    } else {
        eff_a = a.clone();
        eff_t = t.clone();
    }
    let sigma = local_median_order(&eff_t);
    let rooted = RootedTree::new(eff_a, root)?;
    let out = embed_root_source(&rooted, &eff_t, &sigma)?;
    let viols = verify_embedding(a, t, &out.embedding)?;
    if !viols.is_empty() {
        return Err(Error::Invariant("few-leaves embedding failed verification".into()));
    }
    Ok(out.embedding)
}

// ---------------------------------------------------------------------------
// Leaf clusters and the heart
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ClusterSplit {
    pub s_minus: Vec<usize>,
    pub s_plus: Vec<usize>,
    /// Heart as a standalone tree; `heart_nodes[i]` is the original id of
    /// heart node `i`.
    pub heart: OrientedTree,
    pub heart_nodes: Vec<usize>,
    pub n_h: usize,
    pub k_h: usize,
}

/// Fixed-point computation of the in-leaf and out-leaf clusters. Rejects
/// bi-arborescences, where the two clusters may meet.
pub fn clusters(a: &OrientedTree) -> Result<ClusterSplit> {
    if a.bi_arborescence_root().is_some() {
        return Err(Error::Precondition("bi-arborescence input; branch to the bi-arborescence routine".into()));
    }
    let n = a.node_count();
    let mut in_plus = vec![false; n];
    loop {
        let mut changed = false;
        for u in 0..n {
            if in_plus[u] {
                continue;
            }
            if a.in_degree(u) == 1 && a.out_nbrs(u).iter().all(|&v| in_plus[v]) {
                in_plus[u] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut in_minus = vec![false; n];
    loop {
        let mut changed = false;
        for u in 0..n {
            if in_minus[u] {
                continue;
            }
            if a.out_degree(u) == 1 && a.in_nbrs(u).iter().all(|&v| in_minus[v]) {
                in_minus[u] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if (0..n).any(|u| in_plus[u] && in_minus[u]) {
        return Err(Error::Invariant("leaf clusters intersect on a non-bi-arborescence".into()));
    }
    let heart_nodes: Vec<usize> = (0..n).filter(|&u| !in_plus[u] && !in_minus[u]).collect();
    if heart_nodes.is_empty() {
        return Err(Error::Invariant("empty heart on a non-bi-arborescence".into()));
    }
    let local_of: std::collections::HashMap<usize, usize> =
        heart_nodes.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let arcs: Vec<(usize, usize)> = a
        .arcs()
        .iter()
        .filter(|&&(u, v)| local_of.contains_key(&u) && local_of.contains_key(&v))
        .map(|&(u, v)| (local_of[&u], local_of[&v]))
        .collect();
    let heart = OrientedTree::from_arcs(heart_nodes.len(), arcs)
        .map_err(|e| Error::Invariant(format!("heart is not a tree: {e}")))?;
    let lp = heart.leaf_partition();
    let s_minus: Vec<usize> = (0..n).filter(|&u| in_minus[u]).collect();
    let s_plus: Vec<usize> = (0..n).filter(|&u| in_plus[u]).collect();
    // every out-leaf of the heart borders the in-leaf cluster and dually
    if s_minus.len() < lp.out_leaves.len() || s_plus.len() < lp.in_leaves.len() {
        return Err(Error::Invariant("cluster sizes below heart leaf counts".into()));
    }
    let (n_h, k_h) = (heart.node_count(), heart.leaf_count());
    Ok(ClusterSplit { s_minus, s_plus, heart, heart_nodes, n_h, k_h })
}

// ---------------------------------------------------------------------------
// Bi-arborescence shortcut
// ---------------------------------------------------------------------------

/// Bi-arborescence bound: n+k-2 with both leaf kinds present, n+k-1 otherwise.
pub fn bi_arborescence_bound(a: &OrientedTree) -> Result<usize> {
    if a.bi_arborescence_root().is_none() {
        return Err(Error::Precondition("not a bi-arborescence".into()));
    }
    let lp = a.leaf_partition();
    let k = a.leaf_count();
    if !lp.in_leaves.is_empty() && !lp.out_leaves.is_empty() {
        Ok(a.node_count() + k - 2)
    } else {
        Ok(a.node_count() + k - 1)
    }
}

fn induced_subtree(a: &OrientedTree, nodes: &[usize]) -> (OrientedTree, Vec<usize>) {
    let local_of: std::collections::HashMap<usize, usize> =
        nodes.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let arcs: Vec<(usize, usize)> = a
        .arcs()
        .iter()
        .filter(|&&(u, v)| local_of.contains_key(&u) && local_of.contains_key(&v))
        .map(|&(u, v)| (local_of[&u], local_of[&v]))
        .collect();
    (OrientedTree::from_arcs(nodes.len(), arcs).expect("induced set spans a subtree"), nodes.to_vec())
}

/// Embeds a bi-arborescence: the in-part by the dual greedy on a prefix of
/// the order with its root landing on the prefix's last vertex, the out-part
/// by the greedy on the suffix starting at that same vertex.
pub fn embed_bi_arborescence(a: &OrientedTree, t: &Tournament) -> Result<Embedding> {
    let bound = bi_arborescence_bound(a)?;
    if t.order() < bound {
        return Err(Error::Precondition(format!("host order {} below bound {bound}", t.order())));
    }
    let n = a.node_count();
    let lp = a.leaf_partition();
    if lp.in_leaves.is_empty() || lp.out_leaves.is_empty() {
        // pure arborescence
        let m = a.metrics();
        let sigma_host = local_median_order(t);
        if let Some(r) = m.out_arborescence_root {
            let trace = arbo::embed_out_arborescence(&RootedTree::new(a.clone(), r)?, t, &sigma_host)?;
            return Ok(trace.embedding);
        }
        let r = m.in_arborescence_root.ok_or_else(|| {
            Error::Invariant("bi-arborescence with one leaf kind must be an arborescence".into())
        })?;
        let trace = arbo::embed_in_arborescence(&RootedTree::new(a.clone(), r)?, t, &sigma_host)?;
        return Ok(trace.embedding);
    }
    // both kinds: pick the smallest root giving two nontrivial parts
    let root = (0..n)
        .find(|&r| {
            a.bi_arb_split(r)
                .map(|(ins, outs)| !ins.is_empty() && !outs.is_empty())
                .unwrap_or(false)
        })
        .ok_or_else(|| {
            Error::Invariant("no bi-arborescence root with two nontrivial parts".into())
        })?;
    let (ins, outs) = a.bi_arb_split(root).expect("split exists");
    let mut in_nodes = ins;
    in_nodes.push(root);
    in_nodes.sort_unstable();
    let mut out_nodes = outs;
    out_nodes.push(root);
    out_nodes.sort_unstable();
    let (n1, k1) = (in_nodes.len(), lp.in_leaves.len());
    let (n2, k2) = (out_nodes.len(), lp.out_leaves.len());
    debug_assert_eq!(n1 + n2, n + 1);
    let l1 = n1 + k1 - 1;
    let sigma = local_median_order(t);

    let (in_tree, in_map) = induced_subtree(a, &in_nodes);
    let in_root = in_map.iter().position(|&x| x == root).unwrap();
    let prefix: Vec<usize> = sigma.perm()[..l1].to_vec();
    let sub = t.induced(&prefix);
    let trace_in = arbo::embed_in_arborescence(
        &RootedTree::new(in_tree, in_root)?,
        &sub,
        &Ordering::identity(l1),
    )?;

    let (out_tree, out_map) = induced_subtree(a, &out_nodes);
    let out_root = out_map.iter().position(|&x| x == root).unwrap();
    let suffix: Vec<usize> = sigma.perm()[l1 - 1..].to_vec();
    if suffix.len() + 1 < n2 + k2 {
        return Err(Error::Invariant("suffix shorter than the out-part bound".into()));
    }
    let sub2 = t.induced(&suffix);
    let trace_out = arbo::embed_out_arborescence(
        &RootedTree::new(out_tree, out_root)?,
        &sub2,
        &Ordering::identity(suffix.len()),
    )?;

    let mut phi = Embedding::new(n);
    for (local, &orig) in in_map.iter().enumerate() {
        phi.set(orig, prefix[trace_in.embedding.get(local).unwrap()]);
    }
    for (local, &orig) in out_map.iter().enumerate() {
        if orig == root {
            // shared vertex: the in-part put the root on the prefix's last
            // vertex, which is where the out-part's order starts
            debug_assert_eq!(suffix[trace_out.embedding.get(local).unwrap()], phi.get(root).unwrap());
            continue;
        }
        phi.set(orig, suffix[trace_out.embedding.get(local).unwrap()]);
    }
    let viols = verify_embedding(a, t, &phi)?;
    if !viols.is_empty() {
        return Err(Error::internal(
            "bi-arborescence embedding failed verification",
            FailureDump {
                tournament: t.to_file_text(),
                tree: a.to_file_text(),
                ordering: sigma.perm().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                context: format!("first violation: {}", viols[0]),
            },
        ));
    }
    Ok(phi)
}

// ---------------------------------------------------------------------------
// Many-leaves: three phases
// ---------------------------------------------------------------------------

/// `ceil(9n/2 - 5k/2 - 9/2)`.
pub fn many_leaves_bound(a: &OrientedTree) -> usize {
    let (n, k) = (a.node_count(), a.leaf_count());
    (9 * n).saturating_sub(5 * k + 9).div_ceil(2)
}

/// Interval bounds for the three-phase procedure.
#[derive(Clone, Debug, Serialize)]
pub struct PhasePlan {
    pub ell: usize,
    pub p: usize,
}

fn phase_plan(heart: &OrientedTree, root: usize, s_minus_len: usize) -> Result<PhasePlan> {
    let metrics = root_metrics(heart, root)?;
    let lp = heart.leaf_partition();
    let (n_h, k_h) = (heart.node_count(), heart.leaf_count());
    let down_sizes: usize = metrics.components_down.iter().map(|c| c.nodes.len() - 1).sum();
    let ell = n_h + down_sizes + 2 * lp.in_leaves.len() + 2 * s_minus_len - k_h - 1;
    if ell < 1 {
        return Err(Error::Invariant("phase offset must be at least 1".into()));
    }
    let p = ell + n_h + k_h - 1 + metrics.gamma_down;
    Ok(PhasePlan { ell, p })
}

/// Many-leaves entry point. Bi-arborescences are delegated; with one empty
/// cluster the heart is embedded nicely on a prefix and the remaining
/// cluster attached by repeated out-leaf extension; otherwise the three-phase
/// procedure runs: heart via the root-source machinery inside its interval
/// (keeping the equivalent-arborescence padding reserved), then the out-leaf
/// cluster greedily rightward, then the in-leaf cluster greedily leftward.
pub fn embed_many_leaves(a: &OrientedTree, t: &Tournament) -> Result<Embedding> {
    let n = a.node_count();
    if n < 3 {
        return Err(Error::Precondition("need at least three nodes".into()));
    }
    let bound = many_leaves_bound(a);
    if t.order() < bound {
        return Err(Error::Precondition(format!("host order {} below bound {bound}", t.order())));
    }
    if a.bi_arborescence_root().is_some() {
        return embed_bi_arborescence(a, t);
    }
    let split0 = clusters(a)?;
    // duality: make the in-leaf cluster the empty one, or the beta-minimal
    // side the downward one
    let phi = if split0.s_minus.is_empty() {
        many_leaves_oriented(a, t, false)?
    } else if split0.s_plus.is_empty() {
        many_leaves_oriented(a, t, true)?
    } else {
        // choose orientation by beta over the heart's roots
        let heart = &split0.heart;
        let metrics: Vec<RootMetrics> =
            (0..heart.node_count()).map(|r| root_metrics(heart, r).expect("root")).collect();
        let best = metrics.iter().map(|m| m.beta_down.min(m.beta_up)).min().unwrap();
        let down_ok = (0..heart.node_count())
            .any(|r| metrics[r].beta_down == best && heart.in_degree(r) == 0);
        many_leaves_oriented(a, t, !down_ok)?
    };
    let viols = verify_embedding(a, t, &phi)?;
    if !viols.is_empty() {
        return Err(Error::internal(
            "many-leaves embedding failed verification",
            FailureDump {
                tournament: t.to_file_text(),
                tree: a.to_file_text(),
                ordering: String::new(),
                context: format!("first violation: {}", viols[0]),
            },
        ));
    }
    Ok(phi)
}

/// Runs the cluster machinery on `a` or on its reverse, mapping back.
fn many_leaves_oriented(a: &OrientedTree, t: &Tournament, reversed: bool) -> Result<Embedding> {
    if reversed {
        let phi = many_leaves_core(&a.reverse(), &t.reverse())?;
        return Ok(phi);
    }
    many_leaves_core(a, t)
}

fn many_leaves_core(a: &OrientedTree, t: &Tournament) -> Result<Embedding> {
    let split = clusters(a)?;
    let m = t.order();
    let n = a.node_count();
    let sigma = local_median_order(t);
    let mut pos_of = vec![usize::MAX; m];
    for (i, &v) in sigma.perm().iter().enumerate() {
        pos_of[v] = i;
    }
    let hard = |msg: &str, ctx: String| {
        Error::internal(
            msg.to_string(),
            FailureDump {
                tournament: t.to_file_text(),
                tree: a.to_file_text(),
                ordering: sigma.perm().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                context: ctx,
            },
        )
    };

    let mut phi = Embedding::new(n);
    let mut hit = vec![false; m]; // by position
    let mut real_at: Vec<Option<usize>> = vec![None; m];

    if split.s_minus.is_empty() {
        // two phases: nice heart on the prefix, then out-leaf extensions
        let n_h = split.n_h;
        let w0 = 4 * n_h - 3;
        if w0 > m {
            return Err(hard("prefix for the nice heart exceeds the host", format!("w0={w0} m={m}")));
        }
        let prefix: Vec<usize> = sigma.perm()[..w0].to_vec();
        let sub = t.induced(&prefix);
        let sub_sigma = Ordering::identity(w0);
        let heart_rooted = RootedTree::new(split.heart.clone(), 0)?;
        let nice = arbo::embed_sigma_f_nice(&heart_rooted, &sub, &sub_sigma, &ForbiddenSet::empty())?;
        for (local, &orig) in split.heart_nodes.iter().enumerate() {
            let pos = nice.get(local).unwrap();
            phi.set(orig, prefix[pos]);
            hit[pos] = true;
            real_at[pos] = Some(orig);
        }
        // attach the out-leaf cluster one node at a time in growing windows
        let mut unplaced: Vec<usize> = split.s_plus.clone();
        let mut window = w0;
        while !unplaced.is_empty() {
            window += 2;
            if window > m {
                return Err(hard("extension window exceeded the host", format!("window={window}")));
            }
            let node = *unplaced
                .iter()
                .find(|&&x| phi.get(a.in_nbrs(x)[0]).is_some())
                .ok_or_else(|| hard("no attachable cluster node", String::new()))?;
            let father = a.in_nbrs(node)[0];
            let fpos = pos_of[phi.get(father).unwrap()];
            let spot = ((fpos + 1)..window)
                .find(|&j| !hit[j] && t.has_arc(sigma.vertex_at(fpos), sigma.vertex_at(j)))
                .ok_or_else(|| hard("out-leaf extension starved", format!("node {node}")))?;
            phi.set(node, sigma.vertex_at(spot));
            hit[spot] = true;
            real_at[spot] = Some(node);
            unplaced.retain(|&x| x != node);
        }
        return Ok(phi);
    }

    // general case: three phases
    let heart = &split.heart;
    let metrics: Vec<RootMetrics> =
        (0..heart.node_count()).map(|r| root_metrics(heart, r).expect("root")).collect();
    let best = metrics.iter().map(|mtr| mtr.beta_down.min(mtr.beta_up)).min().unwrap();
    let root = (0..heart.node_count())
        .find(|&r| metrics[r].beta_down == best && heart.in_degree(r) == 0)
        .ok_or_else(|| hard("no beta-minimal in-degree-0 heart root on the chosen side", String::new()))?;
    let plan = phase_plan(heart, root, split.s_minus.len())?;
    if plan.p > m {
        return Err(hard("phase-one interval exceeds the host", format!("p={} m={m}", plan.p)));
    }

    // Phase 1: heart inside positions [ell, p)
    let window: Vec<usize> = sigma.perm()[plan.ell..plan.p].to_vec();
    let sub = t.induced(&window);
    let sub_sigma = Ordering::identity(window.len());
    let heart_rooted = RootedTree::new(heart.clone(), root)?;
    let outcome = embed_root_source(&heart_rooted, &sub, &sub_sigma)?;
    for (local, &orig) in split.heart_nodes.iter().enumerate() {
        let v = window[outcome.embedding.get(local).unwrap()];
        phi.set(orig, v);
        hit[pos_of[v]] = true;
        real_at[pos_of[v]] = Some(orig);
    }
    let mut aux_positions = vec![];
    for &lv in &outcome.aux_vertices {
        let v = window[lv];
        hit[pos_of[v]] = true;
        aux_positions.push(pos_of[v]);
    }

    // Phase 2: out-leaf cluster, leftmost anchor first, first free
    // out-neighbour rightward
    let in_splus = {
        let mut f = vec![false; n];
        for &x in &split.s_plus {
            f[x] = true;
        }
        f
    };
    let in_sminus = {
        let mut f = vec![false; n];
        for &x in &split.s_minus {
            f[x] = true;
        }
        f
    };
    let mut remaining = split.s_plus.len();
    while remaining > 0 {
        let mut anchor = None;
        'scan: for i in 0..m {
            if let Some(x) = real_at[i] {
                for &y in a.out_nbrs(x) {
                    if in_splus[y] && phi.get(y).is_none() {
                        anchor = Some((i, x));
                        break 'scan;
                    }
                }
            }
        }
        let Some((i, x)) = anchor else {
            return Err(hard("out-leaf cluster has no embedded anchor", String::new()));
        };
        let spot = ((i + 1)..m)
            .find(|&j| !hit[j] && t.has_arc(sigma.vertex_at(i), sigma.vertex_at(j)))
            .ok_or_else(|| hard("phase-two placement starved", format!("anchor position {i}")))?;
        let son = a
            .out_nbrs(x)
            .iter()
            .copied()
            .filter(|&y| in_splus[y] && phi.get(y).is_none())
            .min()
            .expect("anchor has an unembedded cluster son");
        phi.set(son, sigma.vertex_at(spot));
        hit[spot] = true;
        real_at[spot] = Some(son);
        remaining -= 1;
    }

    // release the equivalent-arborescence padding before phase 3
    for &p in &aux_positions {
        hit[p] = false;
    }

    // Phase 3: in-leaf cluster, rightmost anchor first, last free
    // in-neighbour leftward
    let mut remaining = split.s_minus.len();
    while remaining > 0 {
        let mut anchor = None;
        'scan: for i in (0..m).rev() {
            if let Some(x) = real_at[i] {
                for &y in a.in_nbrs(x) {
                    if in_sminus[y] && phi.get(y).is_none() {
                        anchor = Some((i, x));
                        break 'scan;
                    }
                }
            }
        }
        let Some((i, x)) = anchor else {
            return Err(hard("in-leaf cluster has no embedded anchor", String::new()));
        };
        let spot = (0..i)
            .rev()
            .find(|&j| !hit[j] && t.has_arc(sigma.vertex_at(j), sigma.vertex_at(i)))
            .ok_or_else(|| {
                hard(
                    "phase-three placement starved",
                    format!("anchor position {i}, half-interval guarantee violated"),
                )
            })?;
        debug_assert!(spot < i, "phase-three image must precede its anchor");
        let son = a
            .in_nbrs(x)
            .iter()
            .copied()
            .filter(|&y| in_sminus[y] && phi.get(y).is_none())
            .min()
            .expect("anchor has an unembedded cluster in-neighbour");
        phi.set(son, sigma.vertex_at(spot));
        hit[spot] = true;
        real_at[spot] = Some(son);
        remaining -= 1;
    }

    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::for_each_oriented_tree;

    #[test]
    fn gamma_examples() {
        // directed out-path rooted at its origin: empty downward forest
        let p = OrientedTree::directed_path(5);
        let m = root_metrics(&p, 0).unwrap();
        assert_eq!(m.gamma_down, 0);
        assert_eq!(m.gamma_up, 5 + 1 - 2);
        // single arc r -> a rooted at r
        let arc = OrientedTree::from_arcs(2, vec![(0, 1)]).unwrap();
        let m = root_metrics(&arc, 0).unwrap();
        assert_eq!(m.gamma_up, 1);
        assert_eq!(m.gamma_down, 0);
    }

    #[test]
    fn gamma_sum_bound_small() {
        for n in 2..=8 {
            for_each_oriented_tree(n, |a| {
                let k = a.leaf_count();
                for r in 0..n {
                    let m = root_metrics(a, r).unwrap();
                    assert!(m.gamma_up + m.gamma_down <= n + k - 2, "tree {a:?} root {r}");
                }
            });
        }
    }

    #[test]
    fn choose_root_directed_path() {
        let p = OrientedTree::directed_path(6);
        let (r, rev) = choose_root_few_leaves(&p).unwrap();
        assert_eq!((r, rev), (0, false));
        let m = root_metrics(&p, r).unwrap();
        assert_eq!(m.gamma_down, 0);
    }

    #[test]
    fn choose_root_matches_exhaustive() {
        for n in 2..=7 {
            for_each_oriented_tree(n, |a| {
                let best = min_gamma(a);
                let (r, rev) = choose_root_few_leaves(a).unwrap();
                let eff = if rev { a.reverse() } else { a.clone() };
                let m = root_metrics(&eff, r).unwrap();
                assert_eq!(m.gamma_down, best);
                assert_eq!(eff.in_degree(r), 0);
            });
        }
    }

    #[test]
    fn equivalent_arborescence_example() {
        // A = r->a, b->a rooted at r: downward component {b->a}, one in-leaf,
        // so no padding; A' = {r->a, r->b}
        let a = OrientedTree::from_arcs(3, vec![(0, 1), (2, 1)]).unwrap();
        let rooted = RootedTree::new(a, 0).unwrap();
        let eq = equivalent_arborescence(&rooted).unwrap();
        assert_eq!(eq.arb.node_count(), 3);
        assert!(eq.arb.tree().has_arc(0, 1) && eq.arb.tree().has_arc(0, 2));
        // no downward arcs: A' = A
        let p = RootedTree::new(OrientedTree::directed_path(4), 0).unwrap();
        let eq = equivalent_arborescence(&p).unwrap();
        assert_eq!(eq.arb.tree(), p.tree());
        assert!(eq.blocks.is_empty());
    }

    #[test]
    fn equivalent_arborescence_identities() {
        for n in 2..=7 {
            for_each_oriented_tree(n, |a| {
                for r in 0..n {
                    if a.in_degree(r) != 0 {
                        continue;
                    }
                    let rooted = RootedTree::new(a.clone(), r).unwrap();
                    let eq = equivalent_arborescence(&rooted).unwrap();
                    let expect: usize = n
                        + eq.blocks.iter().map(|b| b.comp.leaves.len() - 1).sum::<usize>();
                    assert_eq!(eq.arb.node_count(), expect);
                    assert!(eq.arb.is_out_arborescence());
                }
            });
        }
    }

    #[test]
    fn root_source_small_example() {
        // A = {r->a, b->a}: n=3, k=2, gamma_down=1, bound 5
        let a = OrientedTree::from_arcs(3, vec![(0, 1), (2, 1)]).unwrap();
        for seed in 0..100u64 {
            let t = Tournament::random(5, seed);
            let sigma = local_median_order(&t);
            let rooted = RootedTree::new(a.clone(), 0).unwrap();
            let out = embed_root_source(&rooted, &t, &sigma).unwrap();
            assert!(verify_embedding(&a, &t, &out.embedding).unwrap().is_empty());
            assert_eq!(out.embedding.get(0), Some(sigma.vertex_at(0)));
        }
    }

    #[test]
    fn few_leaves_random() {
        for seed in 0..150u64 {
            let n = 2 + (seed as usize) % 14;
            let a = OrientedTree::random(n, seed ^ 0xabc);
            let b = few_leaves_bound(&a);
            let t = Tournament::random(b, seed);
            let phi = embed_few_leaves(&a, &t).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty());
        }
    }

    #[test]
    fn clusters_zigzag() {
        // 0->1<-2->3: S+ = {3}, S- = {0}, heart = {1,2} with arc 2->1
        let a = OrientedTree::from_arcs(4, vec![(0, 1), (2, 1), (2, 3)]).unwrap();
        let s = clusters(&a).unwrap();
        assert_eq!(s.s_plus, vec![3]);
        assert_eq!(s.s_minus, vec![0]);
        assert_eq!(s.heart_nodes, vec![1, 2]);
        assert_eq!(s.n_h, 2);
    }

    #[test]
    fn clusters_reject_bi_arborescence() {
        let a = OrientedTree::from_arcs(4, vec![(0, 1), (1, 2), (3, 1)]).unwrap();
        assert!(a.bi_arborescence_root().is_some());
        assert!(matches!(clusters(&a), Err(Error::Precondition(_))));
    }

    #[test]
    fn cluster_bounds_random() {
        for seed in 0..200u64 {
            let n = 4 + (seed as usize) % 9;
            let a = OrientedTree::random(n, seed);
            if a.bi_arborescence_root().is_some() {
                continue;
            }
            let s = clusters(&a).unwrap();
            let lp = s.heart.leaf_partition();
            assert!(s.s_minus.len() >= lp.out_leaves.len());
            assert!(s.s_plus.len() >= lp.in_leaves.len());
        }
    }

    #[test]
    fn bi_arborescence_p3_everywhere() {
        // directed P3 as a bi-arborescence: every 3-tournament hosts it
        let p3 = OrientedTree::directed_path(3);
        for mask in 0..crate::enumerate::tournament_count(3) {
            let t = crate::enumerate::tournament_from_mask(3, mask);
            let phi = embed_bi_arborescence(&p3, &t).unwrap();
            assert!(verify_embedding(&p3, &t, &phi).unwrap().is_empty());
        }
    }

    #[test]
    fn bi_arborescence_random() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..120 {
            let n = 3 + (rand::Rng::gen_range(&mut rng, 0..8usize));
            let a = crate::enumerate::random_bi_arborescence(n, &mut rng);
            let bound = bi_arborescence_bound(&a).unwrap();
            let t = Tournament::random(bound, rand::Rng::gen(&mut rng));
            let phi = embed_bi_arborescence(&a, &t).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty());
        }
    }

    #[test]
    fn many_leaves_random() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut done = 0;
        let mut seed = 0u64;
        while done < 120 {
            seed += 1;
            let n = 4 + (seed as usize) % 12;
            let a = OrientedTree::random(n, seed ^ 0x77);
            if a.is_path() {
                continue;
            }
            let bound = many_leaves_bound(&a);
            let t = Tournament::random(bound, rand::Rng::gen(&mut rng));
            let phi = embed_many_leaves(&a, &t).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty(), "seed {seed}");
            done += 1;
        }
    }

    #[test]
    fn many_leaves_one_empty_cluster() {
        // every leaf out-oriented but two sources merge at node 2, so this is
        // not an arborescence: S- is empty, heart = {0, 1, 2}
        let a = OrientedTree::from_arcs(6, vec![(0, 2), (0, 3), (1, 2), (1, 4), (2, 5)]).unwrap();
        let s = clusters(&a).unwrap();
        assert!(s.s_minus.is_empty());
        let bound = many_leaves_bound(&a);
        for seed in 0..40u64 {
            let t = Tournament::random(bound, seed);
            let phi = embed_many_leaves(&a, &t).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty());
        }
    }
}
