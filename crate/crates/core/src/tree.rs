//! Oriented trees, rooted trees, and leaf classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// An oriented tree: a connected, acyclic underlying graph with every edge
/// given one direction. Nodes are `0..n`.
#[derive(Clone, PartialEq, Eq)]
pub struct OrientedTree {
    n: usize,
    arcs: Vec<(usize, usize)>,
    out_nbrs: Vec<Vec<usize>>,
    in_nbrs: Vec<Vec<usize>>,
}

impl std::fmt::Debug for OrientedTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OrientedTree(n={}, arcs={:?})", self.n, self.arcs)
    }
}

impl OrientedTree {
    pub fn single_node() -> Self {
        OrientedTree { n: 1, arcs: vec![], out_nbrs: vec![vec![]], in_nbrs: vec![vec![]] }
    }

    pub fn from_arcs(n: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invariant("tree must have at least one node".into()));
        }
        if arcs.len() != n - 1 {
            return Err(Error::Invariant(format!("tree on {n} nodes needs {} arcs, got {}", n - 1, arcs.len())));
        }
        let mut out_nbrs = vec![vec![]; n];
        let mut in_nbrs = vec![vec![]; n];
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &arcs {
            if u >= n || v >= n || u == v {
                return Err(Error::Invariant(format!("bad arc ({u},{v}) for {n} nodes")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::Invariant(format!("duplicate pair between {u} and {v}")));
            }
            out_nbrs[u].push(v);
            in_nbrs[v].push(u);
        }
        for l in out_nbrs.iter_mut().chain(in_nbrs.iter_mut()) {
            l.sort_unstable();
        }
        let t = OrientedTree { n, arcs, out_nbrs, in_nbrs };
        // n-1 distinct edges: connected iff acyclic; check connectivity.
        let mut stack = vec![0usize];
        let mut vis = vec![false; n];
        vis[0] = true;
        let mut cnt = 1;
        while let Some(u) = stack.pop() {
            for &v in t.out_nbrs[u].iter().chain(&t.in_nbrs[u]) {
                if !vis[v] {
                    vis[v] = true;
                    cnt += 1;
                    stack.push(v);
                }
            }
        }
        if cnt != n {
            return Err(Error::Invariant("underlying graph is not connected".into()));
        }
        Ok(t)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn out_nbrs(&self, u: usize) -> &[usize] {
        &self.out_nbrs[u]
    }

    pub fn in_nbrs(&self, u: usize) -> &[usize] {
        &self.in_nbrs[u]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out_nbrs[u].len()
    }

    pub fn in_degree(&self, u: usize) -> usize {
        self.in_nbrs[u].len()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.out_degree(u) + self.in_degree(u)
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out_nbrs[u].binary_search(&v).is_ok()
    }

    /// Every arc reversed. Involution.
    pub fn reverse(&self) -> Self {
        let arcs = self.arcs.iter().map(|&(u, v)| (v, u)).collect();
        OrientedTree::from_arcs(self.n, arcs).expect("reverse of a valid tree is valid")
    }

    pub fn leaf_partition(&self) -> LeafPartition {
        let mut p = LeafPartition { in_leaves: vec![], out_leaves: vec![], trivial: self.n == 1 };
        if self.n == 1 {
            return p;
        }
        for u in 0..self.n {
            if self.out_degree(u) == 1 && self.in_degree(u) == 0 {
                p.in_leaves.push(u);
            } else if self.out_degree(u) == 0 && self.in_degree(u) == 1 {
                p.out_leaves.push(u);
            }
        }
        p
    }

    /// Total number of leaves (degree-1 nodes) for bound arithmetic; a single
    /// node counts as one leaf so the `n+k-1`-style formulas stay sane.
    pub fn leaf_count(&self) -> usize {
        if self.n == 1 {
            return 1;
        }
        let p = self.leaf_partition();
        p.in_leaves.len() + p.out_leaves.len()
    }

    pub fn is_path(&self) -> bool {
        (0..self.n).all(|u| self.degree(u) <= 2)
    }

    pub fn metrics(&self) -> TreeMetrics {
        let p = self.leaf_partition();
        let k = p.in_leaves.len() + p.out_leaves.len();
        let out_root = if self.n == 1 {
            Some(0)
        } else {
            let roots: Vec<usize> = (0..self.n).filter(|&u| self.in_degree(u) == 0).collect();
            if roots.len() == 1 && (0..self.n).all(|u| self.in_degree(u) <= 1) {
                Some(roots[0])
            } else {
                None
            }
        };
        let in_root = if self.n == 1 {
            Some(0)
        } else {
            let roots: Vec<usize> = (0..self.n).filter(|&u| self.out_degree(u) == 0).collect();
            if roots.len() == 1 && (0..self.n).all(|u| self.out_degree(u) <= 1) {
                Some(roots[0])
            } else {
                None
            }
        };
        TreeMetrics {
            n: self.n,
            k,
            is_path: self.is_path(),
            out_arborescence_root: out_root,
            in_arborescence_root: in_root,
            bi_arborescence_root: self.bi_arborescence_root(),
        }
    }

    /// Smallest root at which the tree splits into an in-arborescence and an
    /// out-arborescence glued at that root, if any.
    pub fn bi_arborescence_root(&self) -> Option<usize> {
        (0..self.n).find(|&r| self.bi_arb_split(r).is_some())
    }

    /// At root `r`, partition of the other nodes into the in-part and
    /// out-part of a bi-arborescence, if the split is valid.
    pub fn bi_arb_split(&self, r: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        #[derive(Clone, Copy, PartialEq)]
        enum Side {
            In,
            Out,
        }
        let mut side = vec![None; self.n];
        let mut stack = vec![r];
        let mut seen = vec![false; self.n];
        seen[r] = true;
        while let Some(u) = stack.pop() {
            for &v in &self.out_nbrs[u] {
                if seen[v] {
                    continue;
                }
                // arc u -> v points away from the root path: v on the out side
                if u != r && side[u] != Some(Side::Out) {
                    return None;
                }
                side[v] = Some(Side::Out);
                seen[v] = true;
                stack.push(v);
            }
            for &v in &self.in_nbrs[u] {
                if seen[v] {
                    continue;
                }
                if u != r && side[u] != Some(Side::In) {
                    return None;
                }
                side[v] = Some(Side::In);
                seen[v] = true;
                stack.push(v);
            }
        }
        let mut ins = vec![];
        let mut outs = vec![];
        for u in 0..self.n {
            match side[u] {
                Some(Side::In) => ins.push(u),
                Some(Side::Out) => outs.push(u),
                None => {}
            }
        }
        Some((ins, outs))
    }

    /// File format: line 1 is `n`, then `n-1` lines `u v` for arc `u -> v`.
    pub fn from_file_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
        let n: usize = first
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, format!("expected node count, got {first:?}")))?;
        let mut arcs = vec![];
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let u: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(i + 1, format!("bad arc line {line:?}")))?;
            let v: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(i + 1, format!("bad arc line {line:?}")))?;
            if it.next().is_some() {
                return Err(Error::parse(i + 1, format!("trailing tokens in {line:?}")));
            }
            arcs.push((u, v));
        }
        OrientedTree::from_arcs(n, arcs)
    }

    pub fn to_file_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for &(u, v) in &self.arcs {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Directed path `0 -> 1 -> ... -> n-1`.
    pub fn directed_path(n: usize) -> Self {
        let arcs = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        OrientedTree::from_arcs(n.max(1), arcs).unwrap()
    }

    /// Antidirected path: arc between `i` and `i+1` is `i -> i+1` for even
    /// `i`, reversed otherwise.
    pub fn antidirected_path(n: usize) -> Self {
        let arcs = (0..n.saturating_sub(1))
            .map(|i| if i % 2 == 0 { (i, i + 1) } else { (i + 1, i) })
            .collect();
        OrientedTree::from_arcs(n.max(1), arcs).unwrap()
    }

    /// Out-star `S+_n`: node 0 dominating `n-1` others.
    pub fn out_star(n: usize) -> Self {
        let arcs = (1..n).map(|i| (0, i)).collect();
        OrientedTree::from_arcs(n.max(1), arcs).unwrap()
    }

    /// Uniform random labeled tree (Prüfer) with one orientation coin per
    /// edge, in sorted edge order.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_with(n, &mut rng)
    }

    pub fn random_with(n: usize, rng: &mut impl Rng) -> Self {
        if n == 1 {
            return OrientedTree::single_node();
        }
        if n == 2 {
            let arcs = if rng.gen::<bool>() { vec![(0, 1)] } else { vec![(1, 0)] };
            return OrientedTree::from_arcs(2, arcs).unwrap();
        }
        let prufer: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
        let mut edges = prufer_decode(n, &prufer);
        edges.sort_unstable();
        let arcs = edges
            .into_iter()
            .map(|(a, b)| if rng.gen::<bool>() { (a, b) } else { (b, a) })
            .collect();
        OrientedTree::from_arcs(n, arcs).unwrap()
    }
}

fn prufer_decode(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = 0;
    let mut leaf = usize::MAX;
    // find first leaf
    for (i, &d) in degree.iter().enumerate() {
        if d == 1 {
            ptr = i;
            leaf = i;
            break;
        }
    }
    for &x in seq {
        edges.push((leaf.min(x), leaf.max(x)));
        degree[x] -= 1;
        if degree[x] == 1 && x < ptr {
            leaf = x;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf.min(n - 1), leaf.max(n - 1)));
    edges
}

/// In-leaves have out-degree 1 and in-degree 0; out-leaves the opposite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafPartition {
    pub in_leaves: Vec<usize>,
    pub out_leaves: Vec<usize>,
    /// Single-node tree: both sets empty.
    pub trivial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeMetrics {
    pub n: usize,
    pub k: usize,
    pub is_path: bool,
    pub out_arborescence_root: Option<usize>,
    pub in_arborescence_root: Option<usize>,
    pub bi_arborescence_root: Option<usize>,
}

impl TreeMetrics {
    pub fn is_arborescence(&self) -> bool {
        self.out_arborescence_root.is_some() || self.in_arborescence_root.is_some()
    }

    pub fn is_bi_arborescence(&self) -> bool {
        self.bi_arborescence_root.is_some()
    }
}

/// An oriented tree with a distinguished root, plus father/son tables.
#[derive(Clone, Debug)]
pub struct RootedTree {
    tree: OrientedTree,
    root: usize,
    father: Vec<Option<usize>>,
    sons: Vec<Vec<usize>>,
}

impl RootedTree {
    pub fn new(tree: OrientedTree, root: usize) -> Result<Self> {
        let n = tree.node_count();
        if root >= n {
            return Err(Error::Precondition(format!("root {root} out of range")));
        }
        let mut father = vec![None; n];
        let mut sons = vec![vec![]; n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let mut kids: Vec<usize> = tree
                .out_nbrs(u)
                .iter()
                .chain(tree.in_nbrs(u))
                .copied()
                .filter(|&v| !seen[v])
                .collect();
            kids.sort_unstable();
            for v in kids {
                seen[v] = true;
                father[v] = Some(u);
                sons[u].push(v);
                queue.push_back(v);
            }
        }
        Ok(RootedTree { tree, root, father, sons })
    }

    pub fn tree(&self) -> &OrientedTree {
        &self.tree
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn father(&self, v: usize) -> Option<usize> {
        self.father[v]
    }

    pub fn sons(&self, v: usize) -> &[usize] {
        &self.sons[v]
    }

    pub fn node_count(&self) -> usize {
        self.tree.node_count()
    }

    /// True iff every arc points from father to son.
    pub fn is_out_arborescence(&self) -> bool {
        self.tree.arcs().iter().all(|&(u, v)| self.father[v] == Some(u))
    }

    /// Out-leaf count, with the single node counting as one out-leaf.
    pub fn out_leaf_count(&self) -> usize {
        if self.node_count() == 1 {
            return 1;
        }
        self.tree.leaf_partition().out_leaves.len()
    }

    pub fn subtree_sizes(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut sizes = vec![1usize; n];
        let order = self.bfs_order();
        for &u in order.iter().rev() {
            if let Some(f) = self.father[u] {
                sizes[f] += sizes[u];
            }
        }
        sizes
    }

    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.node_count());
        let mut queue = std::collections::VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            queue.extend(self.sons[u].iter().copied());
        }
        order
    }

    /// Arc u->v is upward when u is the father (directed away from the root),
    /// downward when v is the father.
    pub fn is_upward(&self, u: usize, v: usize) -> bool {
        self.father[v] == Some(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_partition_examples() {
        let p3 = OrientedTree::directed_path(3);
        let lp = p3.leaf_partition();
        assert_eq!(lp.in_leaves, vec![0]);
        assert_eq!(lp.out_leaves, vec![2]);

        let star = OrientedTree::out_star(3);
        let lp = star.leaf_partition();
        assert!(lp.in_leaves.is_empty());
        assert_eq!(lp.out_leaves, vec![1, 2]);

        let anti = OrientedTree::antidirected_path(3);
        let lp = anti.leaf_partition();
        assert_eq!(lp.in_leaves, vec![0, 2]);
        assert!(lp.out_leaves.is_empty());

        let single = OrientedTree::single_node();
        let lp = single.leaf_partition();
        assert!(lp.trivial && lp.in_leaves.is_empty() && lp.out_leaves.is_empty());
    }

    #[test]
    fn reverse_swaps_leaf_sets() {
        let t = OrientedTree::random(12, 5);
        let lp = t.leaf_partition();
        let lpr = t.reverse().leaf_partition();
        assert_eq!(lp.in_leaves, lpr.out_leaves);
        assert_eq!(lp.out_leaves, lpr.in_leaves);
        assert_eq!(t.reverse().reverse(), t);
    }

    #[test]
    fn metrics_directed_path() {
        let m = OrientedTree::directed_path(5).metrics();
        assert!(m.is_path);
        assert_eq!(m.k, 2);
        // A directed path is an out-arborescence from its origin and an
        // in-arborescence toward its terminus.
        assert_eq!(m.out_arborescence_root, Some(0));
        assert_eq!(m.in_arborescence_root, Some(4));
        assert!(m.is_bi_arborescence());
    }

    #[test]
    fn metrics_star() {
        let m = OrientedTree::out_star(4).metrics();
        assert_eq!(m.out_arborescence_root, Some(0));
        assert_eq!(m.in_arborescence_root, None);
        assert_eq!(m.k, 3);
        assert!(!m.is_path);
    }

    #[test]
    fn bi_arborescence_join() {
        // 0 -> 1, 0 -> 2, 3 -> 0: in-arb {3->0} and out-arb {0->1, 0->2}.
        let t = OrientedTree::from_arcs(4, vec![(0, 1), (0, 2), (3, 0)]).unwrap();
        assert_eq!(t.bi_arborescence_root(), Some(0));
        let m = t.metrics();
        assert!(m.is_bi_arborescence());
        // it also happens to be an out-arborescence rooted at 3
        assert_eq!(m.out_arborescence_root, Some(3));

        // +(1,1,1) zigzag is not a bi-arborescence.
        let z = OrientedTree::from_arcs(4, vec![(0, 1), (2, 1), (2, 3)]).unwrap();
        assert_eq!(z.bi_arborescence_root(), None);
    }

    #[test]
    fn reject_bad_trees() {
        assert!(OrientedTree::from_arcs(3, vec![(0, 1), (1, 0)]).is_err());
        assert!(OrientedTree::from_arcs(4, vec![(0, 1), (2, 3)]).is_err());
        assert!(OrientedTree::from_arcs(3, vec![(0, 1)]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let t = OrientedTree::random(10, 2);
        let back = OrientedTree::from_file_text(&t.to_file_text()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn random_deterministic() {
        assert_eq!(OrientedTree::random(15, 4), OrientedTree::random(15, 4));
    }

    #[test]
    fn rooted_tables() {
        let t = OrientedTree::from_arcs(4, vec![(0, 1), (0, 2), (3, 0)]).unwrap();
        let r = RootedTree::new(t, 0).unwrap();
        assert_eq!(r.sons(0), &[1, 2, 3]);
        assert_eq!(r.father(3), Some(0));
        assert_eq!(r.subtree_sizes()[0], 4);
        assert!(!r.is_out_arborescence());
    }
}
