//! Per-algorithm unavoidability bounds and the dispatching embedder.

use serde::Serialize;

use crate::arbo;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::median::local_median_order;
use crate::stub;
use crate::tournament::Tournament;
use crate::tree::{OrientedTree, RootedTree};
use crate::tree_embed;
use crate::verify_embedding;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Algorithm {
    Arborescence,
    BiArborescence,
    FewLeaves,
    ManyLeaves,
    VeryFewLeaves,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Algorithm::Arborescence => "arborescence",
            Algorithm::BiArborescence => "bi-arborescence",
            Algorithm::FewLeaves => "few-leaves",
            Algorithm::ManyLeaves => "many-leaves",
            Algorithm::VeryFewLeaves => "very-few-leaves",
        };
        f.write_str(s)
    }
}

/// Guaranteed host orders per applicable algorithm, and the best of them.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub k: usize,
    pub arborescence: Option<usize>,
    pub bi_arborescence: Option<usize>,
    pub few_leaves: usize,
    pub many_leaves: Option<usize>,
    pub very_few_leaves: Option<usize>,
    pub minimum: usize,
    pub chosen: Algorithm,
}

impl BoundReport {
    pub fn rows(&self) -> Vec<(Algorithm, Option<usize>)> {
        vec![
            (Algorithm::Arborescence, self.arborescence),
            (Algorithm::BiArborescence, self.bi_arborescence),
            (Algorithm::FewLeaves, Some(self.few_leaves)),
            (Algorithm::ManyLeaves, self.many_leaves),
            (Algorithm::VeryFewLeaves, self.very_few_leaves),
        ]
    }
}

/// Computes every applicable bound. The arborescence bound counts out-leaves
/// (or in-leaves for the dual), which is why a directed path scores `n`.
pub fn best_bound(a: &OrientedTree) -> Result<BoundReport> {
    let n = a.node_count();
    if n < 2 {
        return Err(Error::Precondition("need at least two nodes".into()));
    }
    let k = a.leaf_count();
    let m = a.metrics();
    let lp = a.leaf_partition();
    let arborescence = match (m.out_arborescence_root, m.in_arborescence_root) {
        (Some(_), Some(_)) => Some(n + lp.out_leaves.len().min(lp.in_leaves.len()).max(1) - 1),
        (Some(_), None) => Some(n + lp.out_leaves.len().max(1) - 1),
        (None, Some(_)) => Some(n + lp.in_leaves.len().max(1) - 1),
        (None, None) => None,
    };
    let bi_arborescence = if m.is_bi_arborescence() {
        Some(tree_embed::bi_arborescence_bound(a)?)
    } else {
        None
    };
    let few_leaves = tree_embed::few_leaves_bound(a);
    let many_leaves = if n >= 3 { Some(tree_embed::many_leaves_bound(a)) } else { None };
    let very_few_leaves =
        if !a.is_path() && k >= 3 { Some(stub::very_few_bound(a)) } else { None };
    // preference order at ties
    let rows = [
        (Algorithm::Arborescence, arborescence),
        (Algorithm::BiArborescence, bi_arborescence),
        (Algorithm::FewLeaves, Some(few_leaves)),
        (Algorithm::ManyLeaves, many_leaves),
        (Algorithm::VeryFewLeaves, very_few_leaves),
    ];
    let (chosen, minimum) = rows
        .iter()
        .filter_map(|&(alg, b)| b.map(|b| (alg, b)))
        .min_by_key(|&(_, b)| b)
        .expect("few-leaves always applies");
    Ok(BoundReport {
        n,
        k,
        arborescence,
        bi_arborescence,
        few_leaves,
        many_leaves,
        very_few_leaves,
        minimum,
        chosen,
    })
}

/// Runs one named algorithm.
pub fn embed_with(alg: Algorithm, a: &OrientedTree, t: &Tournament) -> Result<Embedding> {
    match alg {
        Algorithm::Arborescence => {
            let m = a.metrics();
            let lp = a.leaf_partition();
            let sigma = local_median_order(t);
            // prefer the side with fewer leaves
            let use_out = match (m.out_arborescence_root, m.in_arborescence_root) {
                (Some(_), Some(_)) => lp.out_leaves.len() <= lp.in_leaves.len(),
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => {
                    return Err(Error::Precondition("not an arborescence".into()));
                }
            };
            if use_out {
                let r = m.out_arborescence_root.unwrap();
                Ok(arbo::embed_out_arborescence(&RootedTree::new(a.clone(), r)?, t, &sigma)?.embedding)
            } else {
                let r = m.in_arborescence_root.unwrap();
                Ok(arbo::embed_in_arborescence(&RootedTree::new(a.clone(), r)?, t, &sigma)?.embedding)
            }
        }
        Algorithm::BiArborescence => tree_embed::embed_bi_arborescence(a, t),
        Algorithm::FewLeaves => tree_embed::embed_few_leaves(a, t),
        Algorithm::ManyLeaves => tree_embed::embed_many_leaves(a, t),
        Algorithm::VeryFewLeaves => stub::embed_very_few_leaves(a, t),
    }
}

/// Dispatches to the algorithm with the smallest satisfied bound; reports
/// the failure explicitly when the host beats no bound. Every returned
/// embedding has been re-verified.
pub fn embed_auto(a: &OrientedTree, t: &Tournament) -> Result<(Embedding, Algorithm)> {
    let report = best_bound(a)?;
    let candidate = report
        .rows()
        .into_iter()
        .filter_map(|(alg, b)| b.map(|b| (alg, b)))
        .filter(|&(_, b)| b <= t.order())
        .min_by_key(|&(_, b)| b);
    let Some((alg, _)) = candidate else {
        return Err(Error::NoGuarantee(format!(
            "host order {} is below every bound (minimum {})",
            t.order(),
            report.minimum
        )));
    };
    let phi = embed_with(alg, a, t)?;
    let viols = verify_embedding(a, t, &phi)?;
    if !viols.is_empty() {
        return Err(Error::Invariant(format!("unverified embedding from {alg}: {}", viols[0])));
    }
    Ok((phi, alg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_bound_is_tight() {
        // S+_3: the arborescence bound 4 is the minimum
        let r = best_bound(&OrientedTree::out_star(3)).unwrap();
        assert_eq!(r.arborescence, Some(4));
        assert_eq!(r.minimum, 4);
    }

    #[test]
    fn directed_path_bound() {
        // directed P5: the out-arborescence view has one out-leaf: bound 5
        let r = best_bound(&OrientedTree::directed_path(5)).unwrap();
        assert_eq!(r.arborescence, Some(5));
        assert_eq!(r.minimum, 5);
        assert_eq!(r.few_leaves, 6);
    }

    #[test]
    fn corollary_envelope() {
        // the minimum never exceeds ceil(21n/8 - 47/16) = ceil((42n-47)/16)
        for seed in 0..200u64 {
            let n = 2 + (seed as usize) % 19;
            let a = OrientedTree::random(n, seed);
            let r = best_bound(&a).unwrap();
            let envelope = (42 * n).saturating_sub(47).div_ceil(16);
            assert!(r.minimum <= envelope, "n={n} seed={seed} min={} env={envelope}", r.minimum);
        }
    }

    #[test]
    fn auto_p3_in_c3() {
        let p3 = OrientedTree::directed_path(3);
        let c3 = Tournament::from_arcs(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        let (phi, _) = embed_auto(&p3, &c3).unwrap();
        assert!(verify_embedding(&p3, &c3, &phi).unwrap().is_empty());
    }

    #[test]
    fn auto_star_needs_four() {
        let star = OrientedTree::out_star(3);
        let c3 = Tournament::from_arcs(3, [(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(matches!(embed_auto(&star, &c3), Err(Error::NoGuarantee(_))));
        let t4 = Tournament::random(4, 0);
        let (phi, alg) = embed_auto(&star, &t4).unwrap();
        assert_eq!(alg, Algorithm::Arborescence);
        assert!(verify_embedding(&star, &t4, &phi).unwrap().is_empty());
    }

    #[test]
    fn auto_at_minimum_bound_random() {
        for seed in 0..120u64 {
            let n = 2 + (seed as usize) % 12;
            let a = OrientedTree::random(n, seed.wrapping_mul(31));
            let bound = best_bound(&a).unwrap().minimum;
            let t = Tournament::random(bound, seed);
            let (phi, _) = embed_auto(&a, &t).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty(), "seed {seed}");
        }
    }
}
