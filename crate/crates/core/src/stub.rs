//! Segment analysis, stump types, forks, reduction to stubs, island
//! decomposition, 2-out-path harvesting, Thomason-style path searches, and
//! the stub / very-few-leaves embedding pipeline.

use serde::Serialize;

use crate::arbo::ForbiddenSet;
use crate::embedding::Embedding;
use crate::error::{Error, FailureDump, Result};
use crate::forest::{pinned_forest_embed, ForestHooks, PinnedForest};
use crate::median::{check_m2, local_median_order, Ordering};
use crate::tournament::Tournament;
use crate::tree::{OrientedTree, RootedTree};
use crate::tree_embed;
use crate::verify_embedding;

// ---------------------------------------------------------------------------
// Path types
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// The signed block sequence describing an oriented path: sign of the first
/// arc, then the lengths of the maximal directed runs.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PathType {
    pub sign: Sign,
    pub blocks: Vec<usize>,
}

impl std::fmt::Debug for PathType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}({})",
            if self.sign == Sign::Plus { '+' } else { '-' },
            self.blocks.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
        )
    }
}

impl std::fmt::Display for PathType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl PathType {
    pub fn new(sign: Sign, blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.iter().any(|&b| b == 0) {
            return Err(Error::Invariant("blocks must be nonempty positive lengths".into()));
        }
        Ok(PathType { sign, blocks })
    }

    /// Total length (number of arcs).
    pub fn len(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of vertices of a path of this type.
    pub fn order(&self) -> usize {
        self.len() + 1
    }

    /// Direction of the i-th arc (0-based) along the traversal.
    pub fn arc_forward(&self, mut i: usize) -> bool {
        let mut sign = self.sign;
        for &b in &self.blocks {
            if i < b {
                return sign == Sign::Plus;
            }
            i -= b;
            sign = sign.flip();
        }
        panic!("arc index out of range");
    }

    /// Type computed from a sequence of arc directions (true = forward).
    pub fn from_dirs(dirs: &[bool]) -> Result<Self> {
        if dirs.is_empty() {
            return Err(Error::Invariant("a path type needs at least one arc".into()));
        }
        let sign = if dirs[0] { Sign::Plus } else { Sign::Minus };
        let mut blocks = vec![1usize];
        for w in dirs.windows(2) {
            if w[0] == w[1] {
                *blocks.last_mut().unwrap() += 1;
            } else {
                blocks.push(1);
            }
        }
        Ok(PathType { sign, blocks })
    }

    /// Type of the same path traversed from the other end.
    pub fn opposite(&self) -> PathType {
        let dirs: Vec<bool> = (0..self.len()).rev().map(|i| !self.arc_forward(i)).collect();
        PathType::from_dirs(&dirs).expect("nonempty")
    }

    pub fn is_directed(&self) -> bool {
        self.blocks.len() == 1
    }
}

/// Which of the five stump cases matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StumpCase {
    TrimFirstBlock,    // (i)  sgn(b1-1)
    KeepFirstBlock,    // (ii) sgn(b1) for +(p,1,q), q >= 2
    SingleArc,         // (iii) sgn(1)
    TwoUnitBlocks,     // (iv) sgn(1,1)
    UnitThenTrimmed,   // (v)  sgn(1, b2-1)
}

/// The stump type of a path of length >= 2: the truncated type a fork takes
/// so that the remainder keeps unit end blocks.
pub fn stump_type(p: &PathType) -> Result<(PathType, StumpCase)> {
    if p.len() < 2 {
        return Err(Error::Precondition("stump type needs length at least 2".into()));
    }
    let b = &p.blocks;
    let t = b.len();
    if b[0] >= 2 {
        if p.sign == Sign::Plus && t == 3 && b[1] == 1 && b[2] >= 2 {
            return Ok((PathType::new(p.sign, vec![b[0]])?, StumpCase::KeepFirstBlock));
        }
        return Ok((PathType::new(p.sign, vec![b[0] - 1])?, StumpCase::TrimFirstBlock));
    }
    // b[0] == 1; length >= 2 means t >= 2
    if b[1] >= 2 {
        return Ok((PathType::new(p.sign, vec![1, b[1] - 1])?, StumpCase::UnitThenTrimmed));
    }
    // b[0] = b[1] = 1
    let quad = t == 4 && b[2] == 1 && b[3] >= 2;
    let plus11111 = p.sign == Sign::Plus && *b == vec![1, 1, 1, 1, 1];
    if quad || plus11111 {
        return Ok((PathType::new(p.sign, vec![1, 1])?, StumpCase::TwoUnitBlocks));
    }
    Ok((PathType::new(p.sign, vec![1])?, StumpCase::SingleArc))
}

/// A fork: a tree whose origin reaches two points along paths of the same
/// type.
#[derive(Clone, Debug)]
pub struct Fork {
    pub tree: OrientedTree,
    /// Backbone node ids `0..len` (origin first); the two points follow.
    pub origin: usize,
    pub points: (usize, usize),
    pub ptype: PathType,
}

/// Builds the fork of the given type: backbone of `len` nodes plus two
/// points, both origin-to-point paths having the type.
pub fn make_fork(ptype: &PathType) -> Fork {
    let len = ptype.len();
    let mut arcs = vec![];
    for j in 0..len.saturating_sub(1) {
        if ptype.arc_forward(j) {
            arcs.push((j, j + 1));
        } else {
            arcs.push((j + 1, j));
        }
    }
    let last = len - 1;
    for point in [len, len + 1] {
        if ptype.arc_forward(last) {
            arcs.push((last.min(len - 1), point));
        } else {
            arcs.push((point, last.min(len - 1)));
        }
    }
    let tree = OrientedTree::from_arcs(len + 2, arcs).expect("fork is a tree");
    Fork { tree, origin: 0, points: (len, len + 1), ptype: ptype.clone() }
}

// ---------------------------------------------------------------------------
// Segments
// ---------------------------------------------------------------------------

/// A maximal subpath between branch points. Inner segments appear in both
/// traversal directions, linked through `opposite`.
#[derive(Clone, Debug)]
pub struct Segment {
    /// Node sequence from origin (a branch node) to terminus.
    pub nodes: Vec<usize>,
    pub inner: bool,
    pub ptype: PathType,
    /// Index of the reverse traversal for inner segments.
    pub opposite: Option<usize>,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn segment_type(a: &OrientedTree, nodes: &[usize]) -> PathType {
    let dirs: Vec<bool> = nodes.windows(2).map(|w| a.has_arc(w[0], w[1])).collect();
    PathType::from_dirs(&dirs).expect("segment has arcs")
}

/// Decomposes a non-path tree into its segments. Every arc lies in exactly
/// one outer segment or one inner segment pair.
pub fn segments(a: &OrientedTree) -> Result<Vec<Segment>> {
    let n = a.node_count();
    if a.is_path() {
        return Err(Error::Precondition("segments need a branch node; input is a path".into()));
    }
    let is_branch = |u: usize| a.degree(u) >= 3;
    let mut segs: Vec<Segment> = vec![];
    for origin in 0..n {
        if !is_branch(origin) {
            continue;
        }
        let mut nbrs: Vec<usize> = a.out_nbrs(origin).iter().chain(a.in_nbrs(origin)).copied().collect();
        nbrs.sort_unstable();
        for first in nbrs {
            let mut nodes = vec![origin, first];
            let (mut prev, mut cur) = (origin, first);
            while !is_branch(cur) && a.degree(cur) == 2 {
                let next = a
                    .out_nbrs(cur)
                    .iter()
                    .chain(a.in_nbrs(cur))
                    .copied()
                    .find(|&w| w != prev)
                    .expect("flat node continues");
                nodes.push(next);
                prev = cur;
                cur = next;
            }
            let inner = is_branch(cur);
            segs.push(Segment { ptype: segment_type(a, &nodes), nodes, inner, opposite: None });
        }
    }
    // link inner opposites
    for i in 0..segs.len() {
        if !segs[i].inner || segs[i].opposite.is_some() {
            continue;
        }
        let rev: Vec<usize> = segs[i].nodes.iter().rev().copied().collect();
        let j = segs
            .iter()
            .position(|s| s.nodes == rev)
            .ok_or_else(|| Error::Invariant("inner segment without its opposite".into()))?;
        segs[i].opposite = Some(j);
        segs[j].opposite = Some(i);
    }
    // coverage: outer segments plus one representative per inner pair
    let mut covered = 0usize;
    for (i, s) in segs.iter().enumerate() {
        if !s.inner || s.opposite.map(|j| i < j).unwrap_or(true) {
            covered += s.len();
        }
    }
    if covered != n - 1 {
        return Err(Error::Invariant(format!("segments cover {covered} arcs of {}", n - 1)));
    }
    Ok(segs)
}

/// Stub test: every inner segment has at most three blocks, with unit first
/// and third block when there are three and one unit block when there are
/// two; every outer segment has length 1.
pub fn is_stub(a: &OrientedTree) -> Result<(bool, String)> {
    let segs = segments(a)?;
    for s in &segs {
        if !s.inner {
            if s.len() != 1 {
                return Ok((false, format!("outer segment of length {} at node {}", s.len(), s.nodes[0])));
            }
            continue;
        }
        let b = &s.ptype.blocks;
        let ok = match b.len() {
            1 => true,
            2 => b[0] == 1 || b[1] == 1,
            3 => b[0] == 1 && b[2] == 1,
            _ => false,
        };
        if !ok {
            return Ok((false, format!("inner segment of type {:?} at node {}", s.ptype, s.nodes[0])));
        }
    }
    Ok((true, String::new()))
}

fn is_breakable_inner(ptype: &PathType) -> bool {
    let b = &ptype.blocks;
    let unbreakable = match b.len() {
        1 => true,
        2 => b[0] == 1 || b[1] == 1,
        3 => b[0] == 1 && b[2] == 1,
        _ => false,
    };
    !unbreakable
}

// ---------------------------------------------------------------------------
// Reduction to stubs
// ---------------------------------------------------------------------------

/// Where a reduced-forest node comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Original(usize),
    /// Fork point standing in for original node `stands_for`; `break_id`
    /// indexes `inner_breaks` or `outer_replacements` via `BreakRef`.
    Point { break_ref: BreakRef, which: u8, stands_for: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BreakRef {
    Outer(usize),
    /// Inner break, origin side or terminus side.
    Inner(usize, bool),
}

#[derive(Clone, Debug)]
pub struct StubComponent {
    pub tree: OrientedTree,
    /// local node -> provenance
    pub roles: Vec<Role>,
}

#[derive(Clone, Debug)]
pub struct OuterReplacement {
    /// The segment's nodes in the original tree, origin first.
    pub seg_nodes: Vec<usize>,
    pub fork_type: PathType,
    /// Remainder: original node roles `s_a..s_L`, whose first node is the
    /// role the surviving fork point takes.
    pub remainder_roles: Vec<usize>,
    pub remainder_type: PathType,
}

#[derive(Clone, Debug)]
pub struct InnerBreak {
    pub seg_nodes: Vec<usize>,
    pub fork_type_origin: PathType,
    pub fork_type_terminus: PathType,
    /// Remainder roles from the origin-side shared node to the
    /// terminus-side shared node.
    pub remainder_roles: Vec<usize>,
    pub remainder_type: PathType,
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub components: Vec<StubComponent>,
    pub inner_breaks: Vec<InnerBreak>,
    pub outer_replacements: Vec<OuterReplacement>,
    /// Number of breakable inner segments.
    pub b: usize,
    /// Length-1 outer segments of the original tree.
    pub a_len1_outer: usize,
    /// Per (break_ref, which): component index and local node of each point.
    point_locals: std::collections::HashMap<(BreakRef, u8), (usize, usize)>,
}

impl Reduction {
    pub fn point_local(&self, break_ref: BreakRef, which: u8) -> (usize, usize) {
        self.point_locals[&(break_ref, which)]
    }
}

/// Replaces long outer segments by forks and breaks every breakable inner
/// segment into two forks, leaving a forest of stubs plus the remainder
/// descriptions needed to reconstruct the tree.
pub fn reduce_to_stubs(a: &OrientedTree) -> Result<Reduction> {
    let n = a.node_count();
    let k = a.leaf_count();
    if a.is_path() || k < 3 {
        return Err(Error::Precondition("reduction needs a non-path with at least 3 leaves".into()));
    }
    let segs = segments(a)?;
    let a_len1_outer = segs.iter().filter(|s| !s.inner && s.len() == 1).count();

    // reduced graph: kept original nodes + fresh point nodes
    #[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
    enum RNode {
        Orig(usize),
        Point(usize), // index into point_meta
    }
    let mut point_meta: Vec<(BreakRef, u8, usize)> = vec![]; // (break, which, stands_for)
    let mut arcs: Vec<(RNode, RNode)> = vec![];
    let mut removed = vec![false; n];
    let mut outer_replacements = vec![];
    let mut inner_breaks = vec![];

    // arcs along a kept node run, with original directions
    let push_seg_arcs = |a: &OrientedTree, nodes: &[usize], arcs: &mut Vec<(RNode, RNode)>| {
        for w in nodes.windows(2) {
            if a.has_arc(w[0], w[1]) {
                arcs.push((RNode::Orig(w[0]), RNode::Orig(w[1])));
            } else {
                arcs.push((RNode::Orig(w[1]), RNode::Orig(w[0])));
            }
        }
    };

    // arcs untouched by any operation: those of unbroken segments
    for (si, s) in segs.iter().enumerate() {
        if s.inner {
            // process each inner pair once, from its smaller index
            if s.opposite.map(|j| si > j).unwrap_or(false) {
                continue;
            }
            if !is_breakable_inner(&s.ptype) {
                push_seg_arcs(a, &s.nodes, &mut arcs);
                continue;
            }
            // break: forks at both ends
            let bid = inner_breaks.len();
            let (tau_o, _) = stump_type(&s.ptype)?;
            let opp = &segs[s.opposite.unwrap()];
            let (tau_t, _) = stump_type(&opp.ptype)?;
            let lo = tau_o.len(); // keep s.nodes[0..=lo-1], share role s.nodes[lo]
            let lt = tau_t.len();
            let l = s.len();
            if lo + lt > l {
                return Err(Error::Invariant(format!(
                    "inner break overlaps: stump lengths {lo}+{lt} exceed segment length {l}"
                )));
            }
            // prefix arcs origin side
            push_seg_arcs(a, &s.nodes[..lo], &mut arcs);
            // suffix arcs terminus side
            push_seg_arcs(a, &s.nodes[l - lt + 1..], &mut arcs);
            // the middle disappears
            for &x in &s.nodes[lo..=l - lt] {
                removed[x] = true;
            }
            // fork points replace s.nodes[lo] on the origin side
            for which in 0..2u8 {
                let pid = point_meta.len();
                point_meta.push((BreakRef::Inner(bid, false), which, s.nodes[lo]));
                let anchor = RNode::Orig(s.nodes[lo - 1]);
                if s.ptype.arc_forward(lo - 1) {
                    arcs.push((anchor, RNode::Point(pid)));
                } else {
                    arcs.push((RNode::Point(pid), anchor));
                }
            }
            // and s.nodes[l - lt] on the terminus side (arc toward s.nodes[l-lt+1])
            for which in 0..2u8 {
                let pid = point_meta.len();
                point_meta.push((BreakRef::Inner(bid, true), which, s.nodes[l - lt]));
                let anchor = RNode::Orig(s.nodes[l - lt + 1]);
                if s.ptype.arc_forward(l - lt) {
                    arcs.push((RNode::Point(pid), anchor));
                } else {
                    arcs.push((anchor, RNode::Point(pid)));
                }
            }
            let remainder_roles: Vec<usize> = s.nodes[lo..=l - lt].to_vec();
            let dirs: Vec<bool> = (lo..(l - lt)).map(|j| s.ptype.arc_forward(j)).collect();
            if dirs.is_empty() {
                return Err(Error::Invariant("inner remainder has no arcs".into()));
            }
            let remainder_type = PathType::from_dirs(&dirs)?;
            // designed guarantees: unit end blocks, never +-(1,1,1)
            if *remainder_type.blocks.first().unwrap() != 1
                || *remainder_type.blocks.last().unwrap() != 1
            {
                return Err(Error::Invariant(format!(
                    "inner remainder {remainder_type:?} lacks unit end blocks"
                )));
            }
            if remainder_type.blocks == vec![1, 1, 1] {
                return Err(Error::Invariant("inner remainder of the excluded type (1,1,1)".into()));
            }
            inner_breaks.push(InnerBreak {
                seg_nodes: s.nodes.clone(),
                fork_type_origin: tau_o,
                fork_type_terminus: tau_t,
                remainder_roles,
                remainder_type,
            });
        } else if s.len() == 1 {
            push_seg_arcs(a, &s.nodes, &mut arcs);
        } else {
            // long outer segment: truncate after the stump prefix
            let bid = outer_replacements.len();
            let (tau, _) = stump_type(&s.ptype)?;
            let lo = tau.len();
            let l = s.len();
            push_seg_arcs(a, &s.nodes[..lo], &mut arcs);
            for &x in &s.nodes[lo..] {
                removed[x] = true;
            }
            for which in 0..2u8 {
                let pid = point_meta.len();
                point_meta.push((BreakRef::Outer(bid), which, s.nodes[lo]));
                let anchor = RNode::Orig(s.nodes[lo - 1]);
                if s.ptype.arc_forward(lo - 1) {
                    arcs.push((anchor, RNode::Point(pid)));
                } else {
                    arcs.push((RNode::Point(pid), anchor));
                }
            }
            let remainder_roles: Vec<usize> = s.nodes[lo..].to_vec();
            let dirs: Vec<bool> = (lo..l).map(|j| s.ptype.arc_forward(j)).collect();
            let remainder_type = PathType::from_dirs(&dirs)?;
            if remainder_type.blocks[0] != 1 {
                return Err(Error::Invariant(format!(
                    "outer remainder {remainder_type:?} does not start with a unit block"
                )));
            }
            outer_replacements.push(OuterReplacement {
                seg_nodes: s.nodes.clone(),
                fork_type: tau,
                remainder_roles,
                remainder_type,
            });
        }
    }

    // assemble the reduced forest and split into components
    let mut ids: std::collections::HashMap<RNode, usize> = Default::default();
    let mut roles: Vec<Role> = vec![];
    for u in 0..n {
        if !removed[u] {
            ids.insert(RNode::Orig(u), roles.len());
            roles.push(Role::Original(u));
        }
    }
    for (pid, &(bref, which, stands_for)) in point_meta.iter().enumerate() {
        ids.insert(RNode::Point(pid), roles.len());
        roles.push(Role::Point { break_ref: bref, which, stands_for });
    }
    let total = roles.len();
    let mut adj: Vec<Vec<usize>> = vec![vec![]; total];
    let idx_arcs: Vec<(usize, usize)> = arcs.iter().map(|&(x, y)| (ids[&x], ids[&y])).collect();
    for &(x, y) in &idx_arcs {
        adj[x].push(y);
        adj[y].push(x);
    }
    let mut comp_of = vec![usize::MAX; total];
    let mut comps = 0usize;
    for v in 0..total {
        if comp_of[v] != usize::MAX {
            continue;
        }
        let mut stack = vec![v];
        comp_of[v] = comps;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if comp_of[y] == usize::MAX {
                    comp_of[y] = comps;
                    stack.push(y);
                }
            }
        }
        comps += 1;
    }
    let b = inner_breaks.len();
    if comps != b + 1 {
        return Err(Error::Invariant(format!("reduced forest has {comps} components, expected {}", b + 1)));
    }
    if total > n + b {
        return Err(Error::Invariant(format!("|B| = {total} exceeds |A| + b = {}", n + b)));
    }
    // build the component trees
    let mut local_of = vec![usize::MAX; total];
    let mut comp_nodes: Vec<Vec<usize>> = vec![vec![]; comps];
    for v in 0..total {
        local_of[v] = comp_nodes[comp_of[v]].len();
        comp_nodes[comp_of[v]].push(v);
    }
    let mut comp_arcs: Vec<Vec<(usize, usize)>> = vec![vec![]; comps];
    for &(x, y) in &idx_arcs {
        comp_arcs[comp_of[x]].push((local_of[x], local_of[y]));
    }
    let mut components = vec![];
    let mut point_locals = std::collections::HashMap::new();
    for c in 0..comps {
        let tree = OrientedTree::from_arcs(comp_nodes[c].len(), comp_arcs[c].clone())?;
        let comp_roles: Vec<Role> = comp_nodes[c].iter().map(|&v| roles[v]).collect();
        for (local, role) in comp_roles.iter().enumerate() {
            if let Role::Point { break_ref, which, .. } = role {
                point_locals.insert((*break_ref, *which), (c, local));
            }
        }
        let (ok, why) = is_stub(&tree)?;
        if !ok {
            return Err(Error::Invariant(format!("reduced component {c} is not a stub: {why}")));
        }
        components.push(StubComponent { tree, roles: comp_roles });
    }
    Ok(Reduction { components, inner_breaks, outer_replacements, b, a_len1_outer, point_locals })
}

/// Rebuilds the tree abstractly from the reduction record: forks keep one
/// point, remainders are replayed from their stored types. The result must
/// be isomorphic to the original (exercised by the round-trip tests).
pub fn rebuild_abstract(red: &Reduction) -> OrientedTree {
    // collect arcs over original ids; removed middles are re-created from the
    // stored role lists with the stored remainder types
    let mut arcs: Vec<(usize, usize)> = vec![];
    let mut max_id = 0usize;
    for comp in &red.components {
        for &(u, v) in comp.tree.arcs() {
            let ru = comp.roles[u];
            let rv = comp.roles[v];
            // skip the duplicated point arcs; keep roles through "stands_for"
            let ou = match ru {
                Role::Original(x) => Some(x),
                Role::Point { which: 0, stands_for, .. } => Some(stands_for),
                Role::Point { .. } => None,
            };
            let ov = match rv {
                Role::Original(x) => Some(x),
                Role::Point { which: 0, stands_for, .. } => Some(stands_for),
                Role::Point { .. } => None,
            };
            if let (Some(x), Some(y)) = (ou, ov) {
                arcs.push((x, y));
                max_id = max_id.max(x).max(y);
            }
        }
    }
    for ib in &red.inner_breaks {
        let roles = &ib.remainder_roles;
        for (j, w) in roles.windows(2).enumerate() {
            if ib.remainder_type.arc_forward(j) {
                arcs.push((w[0], w[1]));
            } else {
                arcs.push((w[1], w[0]));
            }
            max_id = max_id.max(w[0]).max(w[1]);
        }
    }
    for or in &red.outer_replacements {
        let roles = &or.remainder_roles;
        for (j, w) in roles.windows(2).enumerate() {
            if or.remainder_type.arc_forward(j) {
                arcs.push((w[0], w[1]));
            } else {
                arcs.push((w[1], w[0]));
            }
            max_id = max_id.max(w[0]).max(w[1]);
        }
    }
    arcs.sort_unstable();
    arcs.dedup();
    OrientedTree::from_arcs(max_id + 1, arcs).expect("rebuild yields the original tree")
}

// ---------------------------------------------------------------------------
// Islands
// ---------------------------------------------------------------------------

/// `n + 36k^2 - 140k + 124`: the order at which a stub with k >= 6 leaves is
/// guaranteed.
pub fn stub_bound(a: &OrientedTree) -> usize {
    let (n, k) = (a.node_count(), a.leaf_count());
    n + 36 * k * k + 124 - 140 * k
}

/// `n + 144k^2 - 280k + 124`: the general very-few-leaves bound.
pub fn very_few_bound(a: &OrientedTree) -> usize {
    let (n, k) = (a.node_count(), a.leaf_count());
    n + 144 * k * k + 124 - 280 * k
}

/// A directed connection between two islands: the removed long block,
/// listed from its origin to its terminus.
#[derive(Clone, Debug)]
pub struct IslandArc {
    pub from: usize,
    pub to: usize,
    pub path: Vec<usize>,
}

impl IslandArc {
    pub fn q_len(&self) -> usize {
        self.path.len() - 2
    }
}

/// Reserved block of positions for one island.
#[derive(Clone, Copy, Debug)]
pub struct Region {
    pub start: usize,
    /// exclusive
    pub end: usize,
    pub alpha: usize,
}

impl Region {
    pub fn mid_lo(&self) -> usize {
        self.start + self.alpha
    }
    pub fn mid_hi(&self, k: usize) -> usize {
        self.start + self.alpha + 16 * k - 58
    }
}

#[derive(Clone, Debug)]
pub struct IslandLayout {
    /// Node sets, in the interval-respecting order C_1..C_r.
    pub islands: Vec<Vec<usize>>,
    pub arcs: Vec<IslandArc>,
    /// Root node of each island (a_1 chosen in C_1, others are path ends).
    pub roots: Vec<usize>,
    pub spc: Vec<usize>,
    pub regions: Vec<Region>,
    /// Per island, (arc index, son island) for both arc directions.
    pub sons: Vec<Vec<(usize, usize)>>,
    pub f_capacity: usize,
    pub bfs_order: Vec<usize>,
    pub k: usize,
}

/// Island decomposition and space budgeting of a stub against a host of
/// order `m`.
pub fn islands_layout(a: &OrientedTree, m: usize) -> Result<IslandLayout> {
    let (ok, why) = is_stub(a)?;
    if !ok {
        return Err(Error::Precondition(format!("not a stub: {why}")));
    }
    let n = a.node_count();
    let k = a.leaf_count();
    if k < 6 {
        return Err(Error::Precondition(format!("stub embedding needs k >= 6 leaves, got {k}")));
    }
    if m < stub_bound(a) {
        return Err(Error::Precondition(format!("host order {m} below stub bound {}", stub_bound(a))));
    }

    // remove the arcs and internal vertices of every block of length >= 3
    let segs = segments(a)?;
    let mut removed_arc = std::collections::HashSet::new(); // (min,max) pairs
    let mut removed_node = vec![false; n];
    let mut raw_paths: Vec<Vec<usize>> = vec![];
    for (si, s) in segs.iter().enumerate() {
        if s.inner && s.opposite.map(|j| si > j).unwrap_or(false) {
            continue;
        }
        // split the node sequence into direction blocks
        let mut start = 0usize;
        while start + 1 < s.nodes.len() {
            let fwd = a.has_arc(s.nodes[start], s.nodes[start + 1]);
            let mut stop = start + 1;
            while stop + 1 < s.nodes.len() && a.has_arc(s.nodes[stop], s.nodes[stop + 1]) == fwd {
                stop += 1;
            }
            let len = stop - start;
            if len >= 3 {
                for w in s.nodes[start..=stop].windows(2) {
                    removed_arc.insert((w[0].min(w[1]), w[0].max(w[1])));
                }
                for &x in &s.nodes[start + 1..stop] {
                    removed_node[x] = true;
                }
                let slice: Vec<usize> = if fwd {
                    s.nodes[start..=stop].to_vec()
                } else {
                    s.nodes[start..=stop].iter().rev().copied().collect()
                };
                raw_paths.push(slice);
            }
            start = stop;
        }
    }

    // components over the kept arcs
    let mut comp = vec![usize::MAX; n];
    let mut adj: Vec<Vec<usize>> = vec![vec![]; n];
    for &(u, v) in a.arcs() {
        if !removed_arc.contains(&(u.min(v), u.max(v))) {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![];
    for v in 0..n {
        if removed_node[v] || comp[v] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut nodes = vec![];
        let mut stack = vec![v];
        comp[v] = id;
        while let Some(x) = stack.pop() {
            nodes.push(x);
            for &y in &adj[x] {
                if comp[y] == usize::MAX && !removed_node[y] {
                    comp[y] = id;
                    stack.push(y);
                }
            }
        }
        nodes.sort_unstable();
        groups.push(nodes);
    }
    let r = groups.len();
    if r > k - 2 {
        return Err(Error::Invariant(format!("{r} islands exceed the k-2 = {} bound", k - 2)));
    }
    for g in &groups {
        if !g.iter().any(|&u| a.degree(u) >= 3) {
            return Err(Error::Invariant("island without a branch node".into()));
        }
    }

    // island tree with directed connection paths
    let raw_arcs: Vec<(usize, usize, Vec<usize>)> = raw_paths
        .into_iter()
        .map(|p| (comp[p[0]], comp[*p.last().unwrap()], p))
        .collect();
    if raw_arcs.len() + 1 != r {
        return Err(Error::Invariant("island connections do not form a tree".into()));
    }
    // root: a source (no incoming connection), smallest min-node
    let mut indeg = vec![0usize; r];
    for &(_, to, _) in &raw_arcs {
        indeg[to] += 1;
    }
    let root_raw = (0..r)
        .filter(|&c| indeg[c] == 0)
        .min_by_key(|&c| groups[c][0])
        .ok_or_else(|| Error::Invariant("island tree has no source".into()))?;

    // interval-respecting order: in-son blocks, the island, out-son blocks;
    // sons sorted by smallest contained node
    let mut nbrs: Vec<Vec<(usize, usize, bool)>> = vec![vec![]; r]; // (arc idx, other, outgoing?)
    for (ai, &(from, to, _)) in raw_arcs.iter().enumerate() {
        nbrs[from].push((ai, to, true));
        nbrs[to].push((ai, from, false));
    }
    fn order_rec(
        c: usize,
        parent: usize,
        nbrs: &[Vec<(usize, usize, bool)>],
        groups: &[Vec<usize>],
        out: &mut Vec<usize>,
    ) {
        let mut in_sons: Vec<usize> = nbrs[c]
            .iter()
            .filter(|&&(_, o, outgoing)| o != parent && !outgoing)
            .map(|&(_, o, _)| o)
            .collect();
        in_sons.sort_by_key(|&o| groups[o][0]);
        let mut out_sons: Vec<usize> = nbrs[c]
            .iter()
            .filter(|&&(_, o, outgoing)| o != parent && outgoing)
            .map(|&(_, o, _)| o)
            .collect();
        out_sons.sort_by_key(|&o| groups[o][0]);
        for s in in_sons {
            order_rec(s, c, nbrs, groups, out);
        }
        out.push(c);
        for s in out_sons {
            order_rec(s, c, nbrs, groups, out);
        }
    }
    let mut seq = vec![];
    order_rec(root_raw, usize::MAX, &nbrs, &groups, &mut seq);
    if seq[0] != root_raw {
        return Err(Error::Invariant("root island is not first (it must be a source)".into()));
    }
    let mut new_of = vec![usize::MAX; r];
    for (i, &c) in seq.iter().enumerate() {
        new_of[c] = i;
    }
    let islands: Vec<Vec<usize>> = seq.iter().map(|&c| groups[c].clone()).collect();
    let arcs: Vec<IslandArc> = raw_arcs
        .into_iter()
        .map(|(f, t2, path)| IslandArc { from: new_of[f], to: new_of[t2], path })
        .collect();
    // property (i): arcs point forward in the order
    for e in &arcs {
        if e.from > e.to {
            return Err(Error::Invariant("island order violates the arc-direction property".into()));
        }
    }
    // property (ii): descendant intervals are contiguous (checked via the
    // rooted structure)
    let mut sons: Vec<Vec<(usize, usize)>> = vec![vec![]; r];
    let mut father = vec![usize::MAX; r];
    {
        let mut seen = vec![false; r];
        seen[0] = true;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(c) = queue.pop_front() {
            let mut kids: Vec<(usize, usize)> = arcs
                .iter()
                .enumerate()
                .filter_map(|(ai, e)| {
                    if e.from == c && !seen[e.to] {
                        Some((ai, e.to))
                    } else if e.to == c && !seen[e.from] {
                        Some((ai, e.from))
                    } else {
                        None
                    }
                })
                .collect();
            kids.sort_by_key(|&(_, s)| s);
            for &(_, s) in &kids {
                seen[s] = true;
                father[s] = c;
                queue.push_back(s);
            }
            sons[c] = kids;
        }
    }
    fn desc_span(c: usize, sons: &[Vec<(usize, usize)>]) -> (usize, usize) {
        let mut lo = c;
        let mut hi = c;
        for &(_, s) in &sons[c] {
            let (a, b) = desc_span(s, sons);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }
    for c in 0..r {
        let (lo, hi) = desc_span(c, &sons);
        let mut count = 0;
        for x in lo..=hi {
            let mut y = x;
            while y != usize::MAX && y != c {
                y = father[y];
            }
            if y == c {
                count += 1;
            }
        }
        if count != hi - lo + 1 {
            return Err(Error::Invariant("descendants are not an index interval".into()));
        }
    }

    // roots
    let mut roots = vec![usize::MAX; r];
    roots[0] = islands[0][0];
    for e in &arcs {
        let (pf, pt) = (e.path[0], *e.path.last().unwrap());
        if father[e.to] == e.from {
            roots[e.to] = pt;
        } else {
            debug_assert_eq!(father[e.from], e.to);
            roots[e.from] = pf;
        }
    }
    if roots.iter().any(|&x| x == usize::MAX) {
        return Err(Error::Invariant("an island has no root".into()));
    }

    // spaces and regions
    let mut spc = vec![0usize; r];
    let mut alpha = vec![0usize; r];
    for p in 0..r {
        let cp = islands[p].len();
        let mut qsum = 0usize;
        let mut qsum_minus = 0usize;
        for &(ai, s) in &sons[p] {
            let e = &arcs[ai];
            qsum += e.q_len() + 1;
            let downward = e.from == s; // arc from the son toward p
            if downward {
                qsum_minus += e.q_len() + 1;
            }
        }
        spc[p] = 12 * cp + 36 * k - 124 + qsum;
        alpha[p] = qsum_minus + 6 * cp + 10 * k - 29;
    }
    let total: usize = spc.iter().sum();
    if total > n + 36 * k * k + 124 - 140 * k {
        return Err(Error::Invariant(format!(
            "space budget {total} exceeds n + 36k^2 - 140k + 124 = {}",
            n + 36 * k * k + 124 - 140 * k
        )));
    }
    let mut regions = vec![];
    let mut base = 0usize;
    for p in 0..r {
        regions.push(Region { start: base, end: base + spc[p], alpha: alpha[p] });
        if alpha[p] + (16 * k - 58) > spc[p] {
            return Err(Error::Invariant("middle block does not fit its region".into()));
        }
        base += spc[p];
    }

    // BFS order over the rooted island tree
    let mut bfs_order = vec![];
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(c) = queue.pop_front() {
        bfs_order.push(c);
        for &(_, s) in &sons[c] {
            queue.push_back(s);
        }
    }

    Ok(IslandLayout {
        islands,
        arcs,
        roots,
        spc,
        regions,
        sons,
        f_capacity: k - 3,
        bfs_order,
        k,
    })
}

// ---------------------------------------------------------------------------
// 2-out-paths (Lemma on internally disjoint short paths)
// ---------------------------------------------------------------------------

/// `k` internally disjoint directed 2-out-paths with origin `sigma[0]`,
/// pairwise distinct middles and distinct termini, the termini in the last
/// `4k - 1` positions. Found as a maximum bipartite matching between
/// out-neighbours of the origin and the terminus zone, whose size the
/// median-order counting guarantees.
pub fn two_out_paths(t: &Tournament, sigma: &Ordering, k: usize) -> Result<Vec<[usize; 3]>> {
    let m = t.order();
    if k == 0 {
        return Ok(vec![]);
    }
    if m < 4 * k {
        return Err(Error::Precondition(format!("host order {m} below 4k = {}", 4 * k)));
    }
    if !check_m2(t, sigma)?.is_empty() {
        return Err(Error::Precondition("ordering fails (M2)".into()));
    }
    let origin = sigma.vertex_at(0);
    let middles: Vec<usize> =
        (1..m).filter(|&w| t.has_arc(origin, sigma.vertex_at(w))).collect();
    let term_lo = m - 4 * k + 1;
    let termini: Vec<usize> = (term_lo..m).collect();
    // Kuhn's matching, left = middles, right = termini
    let adj: Vec<Vec<usize>> = middles
        .iter()
        .map(|&w| {
            termini
                .iter()
                .enumerate()
                .filter(|&(_, &z)| z != w && t.has_arc(sigma.vertex_at(w), sigma.vertex_at(z)))
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let mut match_right: Vec<Option<usize>> = vec![None; termini.len()];
    fn try_kuhn(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        match_right: &mut [Option<usize>],
    ) -> bool {
        for &z in &adj[u] {
            if seen[z] {
                continue;
            }
            seen[z] = true;
            if match_right[z].is_none()
                || try_kuhn(match_right[z].unwrap(), adj, seen, match_right)
            {
                match_right[z] = Some(u);
                return true;
            }
        }
        false
    }
    let mut matched = 0;
    for u in 0..middles.len() {
        let mut seen = vec![false; termini.len()];
        if try_kuhn(u, &adj, &mut seen, &mut match_right) {
            matched += 1;
            if matched == k {
                break;
            }
        }
    }
    if matched < k {
        return Err(Error::internal(
            "fewer than k disjoint 2-out-paths (contradicts the harvesting lemma)",
            FailureDump {
                tournament: t.to_file_text(),
                tree: String::new(),
                ordering: sigma.perm().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                context: format!("k={k}, matched={matched}"),
            },
        ));
    }
    let mut pairs: Vec<(usize, usize)> = match_right
        .iter()
        .enumerate()
        .filter_map(|(z, u)| u.map(|u| (middles[u], termini[z])))
        .collect();
    pairs.sort_unstable();
    pairs.truncate(k);
    Ok(pairs
        .into_iter()
        .map(|(w, z)| [origin, sigma.vertex_at(w), sigma.vertex_at(z)])
        .collect())
}

// ---------------------------------------------------------------------------
// Thomason-style path searches
// ---------------------------------------------------------------------------

/// Backtracking length cap; these searches are only guaranteed (and only
/// meant to run) at theorem-hypothesis sizes, where factorial worst cases
/// stay out of reach at desk scale.
pub const DEFAULT_PATH_SEARCH_CAP: usize = 24;

const SEARCH_STEP_BUDGET: u64 = 200_000_000;

fn dfs_path(
    t: &Tournament,
    ptype: &PathType,
    first_choices: &[usize],
    last_set: Option<&[bool]>,
    budget: &mut u64,
) -> Option<Vec<usize>> {
    let order = ptype.order();
    let mut used = vec![false; t.order()];
    let mut path = Vec::with_capacity(order);
    fn rec(
        t: &Tournament,
        ptype: &PathType,
        last_set: Option<&[bool]>,
        used: &mut [bool],
        path: &mut Vec<usize>,
        budget: &mut u64,
    ) -> bool {
        if path.len() == ptype.order() {
            return true;
        }
        if *budget == 0 {
            return false;
        }
        let prev = *path.last().unwrap();
        let fwd = ptype.arc_forward(path.len() - 1);
        let final_step = path.len() + 1 == ptype.order();
        for v in 0..t.order() {
            if used[v] {
                continue;
            }
            let ok = if fwd { t.has_arc(prev, v) } else { t.has_arc(v, prev) };
            if !ok {
                continue;
            }
            if final_step {
                if let Some(ls) = last_set {
                    if !ls[v] {
                        continue;
                    }
                }
            }
            *budget -= 1;
            used[v] = true;
            path.push(v);
            if rec(t, ptype, last_set, used, path, budget) {
                return true;
            }
            path.pop();
            used[v] = false;
        }
        false
    }
    for &v in first_choices {
        if used[v] {
            continue;
        }
        used[v] = true;
        path.push(v);
        if rec(t, ptype, last_set, &mut used, &mut path, budget) {
            return Some(path);
        }
        path.pop();
        used[v] = false;
    }
    None
}

/// A copy of a path of the given type with origin in `x`, by exhaustive
/// backtracking. Guaranteed whenever `|T| >= order + 1` and
/// `|x| >= b_1 + 1`.
pub fn find_path_origin_set(
    t: &Tournament,
    x: &[usize],
    ptype: &PathType,
    cap: usize,
) -> Result<Vec<usize>> {
    if ptype.len() > cap {
        return Err(Error::Precondition(format!(
            "path length {} exceeds the search cap {cap}",
            ptype.len()
        )));
    }
    if t.order() < ptype.order() + 1 {
        return Err(Error::Precondition(format!(
            "host order {} below the theorem hypothesis {}",
            t.order(),
            ptype.order() + 1
        )));
    }
    let mut x: Vec<usize> = x.to_vec();
    x.sort_unstable();
    x.dedup();
    if x.len() < ptype.blocks[0] + 1 {
        return Err(Error::Precondition(format!(
            "origin set must have at least b1+1 = {} vertices",
            ptype.blocks[0] + 1
        )));
    }
    let mut budget = SEARCH_STEP_BUDGET;
    match dfs_path(t, ptype, &x, None, &mut budget) {
        Some(p) => Ok(p),
        None if budget == 0 => Err(Error::Precondition("path search budget exhausted".into())),
        None => Err(Error::internal(
            "no path with origin in the set (contradicts the origin-set theorem)",
            FailureDump {
                tournament: t.to_file_text(),
                tree: String::new(),
                ordering: String::new(),
                context: format!("type {ptype:?}, origin set {x:?}"),
            },
        )),
    }
}

/// A copy of a non-directed path with unit end blocks, origin in `x` and
/// terminus in `y`. Excluded type: +-(1,1,1). Guaranteed whenever
/// `|T| >= order + 2` with disjoint sets of size at least 2.
pub fn find_path_between_sets(
    t: &Tournament,
    x: &[usize],
    y: &[usize],
    ptype: &PathType,
    cap: usize,
) -> Result<Vec<usize>> {
    if ptype.len() > cap {
        return Err(Error::Precondition(format!(
            "path length {} exceeds the search cap {cap}",
            ptype.len()
        )));
    }
    if ptype.is_directed()
        || ptype.blocks[0] != 1
        || *ptype.blocks.last().unwrap() != 1
    {
        return Err(Error::Precondition(
            "type must be non-directed with unit first and last blocks".into(),
        ));
    }
    if ptype.blocks == vec![1, 1, 1] {
        return Err(Error::Precondition("the type (1,1,1) is excluded by the theorem".into()));
    }
    if t.order() < ptype.order() + 2 {
        return Err(Error::Precondition(format!(
            "host order {} below the theorem hypothesis {}",
            t.order(),
            ptype.order() + 2
        )));
    }
    let mut xs: Vec<usize> = x.to_vec();
    xs.sort_unstable();
    xs.dedup();
    let mut ys: Vec<usize> = y.to_vec();
    ys.sort_unstable();
    ys.dedup();
    if xs.len() < 2 || ys.len() < 2 || xs.iter().any(|v| ys.contains(v)) {
        return Err(Error::Precondition("need disjoint end sets of size at least 2".into()));
    }
    let mut last = vec![false; t.order()];
    for &v in &ys {
        last[v] = true;
    }
    let mut budget = SEARCH_STEP_BUDGET;
    match dfs_path(t, ptype, &xs, Some(&last), &mut budget) {
        Some(p) => Ok(p),
        None if budget == 0 => Err(Error::Precondition("path search budget exhausted".into())),
        None => Err(Error::internal(
            "no path between the sets (contradicts the two-set theorem)",
            FailureDump {
                tournament: t.to_file_text(),
                tree: String::new(),
                ordering: String::new(),
                context: format!("type {ptype:?}, x {xs:?}, y {ys:?}"),
            },
        )),
    }
}

// ---------------------------------------------------------------------------
// Stub embedding
// ---------------------------------------------------------------------------

struct StubCtx<'a> {
    a: &'a OrientedTree,
    t: &'a Tournament,
    sigma: &'a Ordering,
    t_rev: Tournament,
    sigma_rev: Ordering,
    m: usize,
    k: usize,
    pos_of: Vec<usize>,
    phi_pos: Vec<Option<usize>>,
    hit: Vec<bool>,
    /// forbidden positions (the middles of spliced 2-out-paths)
    forb: Vec<usize>,
    root_pos: Vec<Option<usize>>,
}

impl<'a> StubCtx<'a> {
    fn hard(&self, msg: &str, ctx: String) -> Error {
        Error::internal(
            msg.to_string(),
            FailureDump {
                tournament: self.t.to_file_text(),
                tree: self.a.to_file_text(),
                ordering: self.sigma.perm().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                context: ctx,
            },
        )
    }

    fn place(&mut self, node: usize, pos: usize) -> Result<()> {
        if self.hit[pos] {
            return Err(self.hard("double placement", format!("node {node} at position {pos}")));
        }
        if self.forb.contains(&pos) {
            return Err(self.hard("placement on a forbidden vertex", format!("node {node} at {pos}")));
        }
        self.phi_pos[node] = Some(pos);
        self.hit[pos] = true;
        Ok(())
    }
}

/// Embeds a stub with k >= 6 leaves into a host of order at least
/// `n + 36k^2 - 140k + 124`: islands are embedded in BFS order, each nicely
/// inside a window centred on its root; son-ward connection paths leave
/// through the margin zones, their tails via the pinned forest machinery,
/// and their last two nodes ride a short 2-out-path into the son's middle
/// block, whose middle vertex becomes forbidden for everyone else.
pub fn embed_stub(a: &OrientedTree, t: &Tournament, sigma: &Ordering) -> Result<Embedding> {
    let lay = islands_layout(a, t.order())?;
    if !check_m2(t, sigma)?.is_empty() {
        return Err(Error::Precondition("ordering fails (M2)".into()));
    }
    let m = t.order();
    let k = lay.k;
    let mut pos_of = vec![usize::MAX; m];
    for (i, &v) in sigma.perm().iter().enumerate() {
        pos_of[v] = i;
    }
    let mut ctx = StubCtx {
        a,
        t,
        sigma,
        t_rev: t.reverse(),
        sigma_rev: sigma.reversed(),
        m,
        k,
        pos_of,
        phi_pos: vec![None; a.node_count()],
        hit: vec![false; m],
        forb: vec![],
        root_pos: vec![None; lay.islands.len()],
    };

    // seed: the first island's root at the start of its middle block
    let first = lay.regions[0].mid_lo();
    ctx.place(lay.roots[0], first)?;
    ctx.root_pos[0] = Some(first);

    for &p in &lay.bfs_order.clone() {
        embed_island(&mut ctx, &lay, p)?;
    }

    if ctx.forb.len() > lay.f_capacity {
        return Err(ctx.hard("forbidden set exceeded k-3", format!("{} vertices", ctx.forb.len())));
    }
    let mut phi = Embedding::new(a.node_count());
    for node in 0..a.node_count() {
        let Some(pos) = ctx.phi_pos[node] else {
            return Err(ctx.hard("node left unembedded", format!("node {node}")));
        };
        phi.set(node, sigma.vertex_at(pos));
    }
    let viols = verify_embedding(a, t, &phi)?;
    if !viols.is_empty() {
        return Err(ctx.hard("stub embedding failed verification", format!("{}", viols[0])));
    }
    Ok(phi)
}

fn embed_island(ctx: &mut StubCtx, lay: &IslandLayout, p: usize) -> Result<()> {
    let k = ctx.k;
    let reg = lay.regions[p];
    let cp = lay.islands[p].len();
    let i = ctx.root_pos[p].ok_or_else(|| ctx.hard("island root not yet placed", format!("island {p}")))?;
    if i < reg.mid_lo() || i >= reg.mid_hi(k) {
        return Err(ctx.hard("island root outside its middle block", format!("island {p} at {i}")));
    }

    // Step 1: nice embedding of the island inside I_p
    let half = 2 * cp + 2 * k - 5;
    if i < half || i + half >= ctx.m {
        return Err(ctx.hard("island window leaves the host", format!("island {p}")));
    }
    let (ip_lo, ip_hi) = (i - half, i + half); // inclusive
    if ip_lo < reg.start || ip_hi >= reg.end {
        return Err(ctx.hard("island window leaves its region", format!("island {p}")));
    }
    // fixed-point window: half-width w = 2|C_p| + 2|F cap window| - 2
    let mut w = 2 * cp - 2;
    loop {
        let f_in = ctx.forb.iter().filter(|&&q| q + w >= i && q <= i + w).count();
        let w2 = 2 * cp + 2 * f_in - 2;
        if w2 == w {
            break;
        }
        w = w2;
        if w > half {
            return Err(ctx.hard("nice window outgrew I_p", format!("island {p}, w {w}")));
        }
    }
    let verts: Vec<usize> = (i - w..=i + w).map(|q| ctx.sigma.vertex_at(q)).collect();
    let sub = ctx.t.induced(&verts);
    let f_local: Vec<usize> = ctx
        .forb
        .iter()
        .filter(|&&q| q + w >= i && q <= i + w)
        .map(|&q| q - (i - w))
        .collect();
    let capacity = f_local.len();
    let forb_set = ForbiddenSet::new(f_local, capacity)?;
    // island as a rooted tree on local ids
    let local_of: std::collections::HashMap<usize, usize> =
        lay.islands[p].iter().enumerate().map(|(l, &x)| (x, l)).collect();
    let arcs: Vec<(usize, usize)> = ctx
        .a
        .arcs()
        .iter()
        .filter(|&&(u, v)| local_of.contains_key(&u) && local_of.contains_key(&v))
        .map(|&(u, v)| (local_of[&u], local_of[&v]))
        .collect();
    let island_tree = OrientedTree::from_arcs(cp, arcs)?;
    let rooted = RootedTree::new(island_tree, local_of[&lay.roots[p]])?;
    let nice = crate::arbo::embed_sigma_f_nice(&rooted, &sub, &Ordering::identity(sub.order()), &forb_set)?;
    for (local, &orig) in lay.islands[p].iter().enumerate() {
        let pos = (i - w) + nice.get(local).expect("nice embedding total");
        if orig == lay.roots[p] {
            if pos != i {
                return Err(ctx.hard("nice embedding moved the island root", format!("island {p}")));
            }
            continue;
        }
        ctx.place(orig, pos)?;
    }

    // Steps 2 and 3 on both sides
    for upward in [true, false] {
        island_side(ctx, lay, p, i, upward)?;
    }
    Ok(())
}

/// One splice: the last two nodes of a connection path placed on a
/// 2-out-path reaching the son's middle block.
struct Splice {
    arc: usize,
    middle_pos: usize,
    terminus_pos: usize,
    son: usize,
}

struct Step3Hooks<'a, 'b> {
    ctx: &'a StubCtx<'b>,
    lay: &'a IslandLayout,
    /// arc index per engine arborescence, pin order
    arc_order: Vec<usize>,
    upward: bool,
    /// engine window in global forward positions: [w_lo, w_hi)
    w_lo: usize,
    w_hi: usize,
    splices: Vec<Splice>,
}

impl<'a, 'b> Step3Hooks<'a, 'b> {
    /// view position (0-based along the traversal direction) -> global
    fn to_global(&self, wp: usize) -> usize {
        if self.upward {
            self.w_lo + wp
        } else {
            self.w_hi - 1 - wp
        }
    }
}

impl<'a, 'b> ForestHooks for Step3Hooks<'a, 'b> {
    fn reset(&mut self) {
        self.splices.clear();
    }

    fn arb_complete(
        &mut self,
        q: usize,
        image_of: &dyn Fn(usize, usize) -> Option<usize>,
        engine_hit: &dyn Fn(usize) -> bool,
        extra_blocked: &mut Vec<usize>,
    ) -> Result<()> {
        let ctx = self.ctx;
        let k = ctx.k;
        let ai = self.arc_order[q];
        let e = &self.lay.arcs[ai];
        let son = if self.upward { e.to } else { e.from };
        // last node of Q(e) in traversal order
        let arb_len = e.path.len() - 3;
        let wp = image_of(q, arb_len - 1).expect("completed");
        let g_t = self.to_global(wp);
        // the 2-out-path window runs from the image of Q's last node to the
        // end of the son's middle block, in view coordinates
        let son_mid_lo = self.lay.regions[son].mid_lo();
        let son_mid_hi = self.lay.regions[son].mid_hi(k);
        let (view_t, view_sigma): (&Tournament, &Ordering) = if self.upward {
            (ctx.t, ctx.sigma)
        } else {
            (&ctx.t_rev, &ctx.sigma_rev)
        };
        let vp = |g: usize| if self.upward { g } else { ctx.m - 1 - g };
        let v_t = vp(g_t);
        let v_end = if self.upward { son_mid_hi } else { ctx.m - son_mid_lo };
        if v_end <= v_t {
            return Err(ctx.hard("son middle block behind the splice origin", format!("arc {ai}")));
        }
        let kk = 4 * k - 15;
        if v_end - v_t < 4 * kk {
            return Err(ctx.hard(
                "splice window shorter than the harvesting lemma needs",
                format!("arc {ai}: {} < {}", v_end - v_t, 4 * kk),
            ));
        }
        let verts: Vec<usize> = (v_t..v_end).map(|q2| view_sigma.vertex_at(q2)).collect();
        let sub = view_t.induced(&verts);
        let cands = two_out_paths(&sub, &Ordering::identity(verts.len()), kk)?;
        // availability filters
        let in_engine = |g: usize| -> Option<usize> {
            if g >= self.w_lo && g < self.w_hi {
                Some(if self.upward { g - self.w_lo } else { self.w_hi - 1 - g })
            } else {
                None
            }
        };
        let f_now = ctx.forb.len() + self.splices.len();
        if f_now + 4 > k {
            return Err(ctx.hard("forbidden set too large before a splice", format!("|F| = {f_now}")));
        }
        let root_positions: Vec<usize> = ctx
            .root_pos
            .iter()
            .flatten()
            .copied()
            .chain(self.splices.iter().map(|s| s.terminus_pos))
            .collect();
        let is_free = |g: usize| -> bool {
            if ctx.hit[g] || ctx.forb.contains(&g) {
                return false;
            }
            if let Some(wp2) = in_engine(g) {
                if engine_hit(wp2) {
                    return false;
                }
            }
            if self
                .splices
                .iter()
                .any(|s| s.middle_pos == g || s.terminus_pos == g)
            {
                return false;
            }
            true
        };
        let chosen = cands
            .iter()
            .filter_map(|&[_, w_local, z_local]| {
                let g_w = ctx.pos_of[verts[w_local]];
                let g_z = ctx.pos_of[verts[z_local]];
                if is_free(g_w)
                    && is_free(g_z)
                    && !root_positions.contains(&g_w)
                    && !root_positions.contains(&g_z)
                {
                    Some((vp(g_w), g_w, g_z))
                } else {
                    None
                }
            })
            .min();
        let Some((_, g_w, g_z)) = chosen else {
            return Err(ctx.hard(
                "every candidate 2-out-path blocked",
                format!("arc {ai}: {} candidates", cands.len()),
            ));
        };
        if g_z < self.lay.regions[son].mid_lo() || g_z >= self.lay.regions[son].mid_hi(k) {
            return Err(ctx.hard("splice terminus outside the son's middle block", format!("arc {ai}")));
        }
        self.splices.push(Splice { arc: ai, middle_pos: g_w, terminus_pos: g_z, son });
        if let Some(wp2) = in_engine(g_w) {
            extra_blocked.push(wp2);
        }
        Ok(())
    }
}

fn island_side(ctx: &mut StubCtx, lay: &IslandLayout, p: usize, i: usize, upward: bool) -> Result<()> {
    let k = ctx.k;
    let reg = lay.regions[p];
    let cp = lay.islands[p].len();
    let mut side_arcs: Vec<usize> = lay.sons[p]
        .iter()
        .filter(|&&(ai, s)| {
            let e = &lay.arcs[ai];
            if upward {
                e.from == p && e.to == s
            } else {
                e.from == s && e.to == p
            }
        })
        .map(|&(ai, _)| ai)
        .collect();
    side_arcs.sort_by_key(|&ai| if upward { lay.arcs[ai].to } else { lay.arcs[ai].from });
    if side_arcs.is_empty() {
        return Ok(());
    }
    let ecnt = side_arcs.len();

    // Step 2: second node of each path just outside I_p
    let mut pins_global = vec![];
    for &ai in &side_arcs {
        let e = &lay.arcs[ai];
        let (anchor_node, next_node) = if upward {
            (e.path[0], e.path[1])
        } else {
            (e.path[e.path.len() - 1], e.path[e.path.len() - 2])
        };
        let apos = ctx.phi_pos[anchor_node]
            .ok_or_else(|| ctx.hard("connection anchor unembedded", format!("arc {ai}")))?;
        let av = ctx.sigma.vertex_at(apos);
        let spot = if upward {
            let lo = i + 2 * cp + 2 * k - 4;
            let hi_assert = i + 6 * cp + 2 * ecnt + 8 * k - 21;
            let found = (lo..reg.end).find(|&j| {
                !ctx.hit[j]
                    && !ctx.forb.contains(&j)
                    && ctx.t.has_arc(av, ctx.sigma.vertex_at(j))
            });
            match found {
                Some(j) if j <= hi_assert => j,
                Some(j) => {
                    return Err(ctx.hard("step-2 image beyond its zone", format!("arc {ai} at {j}")))
                }
                None => return Err(ctx.hard("step-2 starved", format!("arc {ai}"))),
            }
        } else {
            let hi = i
                .checked_sub(2 * cp + 2 * k - 4)
                .ok_or_else(|| ctx.hard("step-2 window underflow", format!("arc {ai}")))?;
            let lo_assert = i.saturating_sub(6 * cp + 2 * ecnt + 8 * k - 21);
            let found = (reg.start..=hi)
                .rev()
                .find(|&j| {
                    !ctx.hit[j]
                        && !ctx.forb.contains(&j)
                        && ctx.t.has_arc(ctx.sigma.vertex_at(j), av)
                });
            match found {
                Some(j) if j >= lo_assert => j,
                Some(j) => {
                    return Err(ctx.hard("step-2 image beyond its zone", format!("arc {ai} at {j}")))
                }
                None => return Err(ctx.hard("step-2 starved", format!("arc {ai}"))),
            }
        };
        ctx.place(next_node, spot)?;
        pins_global.push(spot);
    }

    // Step 3: the path tails through the pinned forest, splicing into the
    // sons' middle blocks as each tail completes
    let (w_lo, w_hi) = if upward {
        (i + 2 * cp + 2 * k - 4, reg.end)
    } else {
        (reg.start, i - (2 * cp + 2 * k - 4) + 1)
    };
    let s = 4 * cp + 2 * ecnt + 6 * k - 16;
    // arcs ordered by pin position in view coordinates
    let vp = |g: usize| if upward { g - w_lo } else { w_hi - 1 - g };
    let mut order: Vec<(usize, usize)> = side_arcs
        .iter()
        .zip(&pins_global)
        .map(|(&ai, &g)| (vp(g), ai))
        .collect();
    order.sort_unstable();
    let arc_order: Vec<usize> = order.iter().map(|&(_, ai)| ai).collect();
    let pins: Vec<usize> = order.iter().map(|&(p2, _)| p2).collect();
    if pins.iter().any(|&x| x >= s) {
        return Err(ctx.hard("a pin fell outside the pin zone", format!("island {p}")));
    }
    // path tails as rooted directed paths in view order
    let mut arbs = vec![];
    for &ai in &arc_order {
        let e = &lay.arcs[ai];
        let len = e.path.len() - 3;
        let tail = OrientedTree::from_arcs(len, (0..len.saturating_sub(1)).map(|j| (j, j + 1)).collect())?;
        arbs.push(RootedTree::new(tail, 0)?);
    }
    let verts: Vec<usize> = if upward {
        (w_lo..w_hi).map(|g| ctx.sigma.vertex_at(g)).collect()
    } else {
        (w_lo..w_hi).rev().map(|g| ctx.sigma.vertex_at(g)).collect()
    };
    let window_t = if upward { ctx.t.induced(&verts) } else { ctx.t_rev.induced(&verts) };
    let window_sigma = Ordering::identity(verts.len());
    let pin_set: std::collections::HashSet<usize> = pins.iter().copied().collect();
    let hit_snapshot = ctx.hit.clone();
    let forb_snapshot = ctx.forb.clone();
    let to_global = |wp: usize| if upward { w_lo + wp } else { w_hi - 1 - wp };
    let blocked = move |wp: usize| -> bool {
        if pin_set.contains(&wp) {
            return false;
        }
        let g = to_global(wp);
        hit_snapshot[g] || forb_snapshot.contains(&g)
    };
    let spec = PinnedForest { arbs: &arbs, pins: &pins, s };
    let mut hooks = Step3Hooks {
        ctx,
        lay,
        arc_order: arc_order.clone(),
        upward,
        w_lo,
        w_hi,
        splices: vec![],
    };
    let images = pinned_forest_embed(&spec, &window_t, &window_sigma, &blocked, &mut hooks)?;
    let splices = std::mem::take(&mut hooks.splices);
    if splices.len() != arc_order.len() {
        return Err(ctx.hard("a connection path never spliced", format!("island {p}")));
    }

    // commit tails
    for (q, &ai) in arc_order.iter().enumerate() {
        let e = &lay.arcs[ai];
        let len = e.path.len() - 3;
        for j in 0..len {
            let node = if upward { e.path[1 + j] } else { e.path[e.path.len() - 2 - j] };
            let g = if upward { w_lo + images[q][j] } else { w_hi - 1 - images[q][j] };
            if j == 0 {
                if ctx.phi_pos[node] != Some(g) {
                    return Err(ctx.hard("tail root moved off its pin", format!("arc {ai}")));
                }
                continue;
            }
            ctx.place(node, g)?;
        }
    }
    // commit splices
    for sp in splices {
        let e = &lay.arcs[sp.arc];
        let (penultimate, terminus) = if upward {
            (e.path[e.path.len() - 2], e.path[e.path.len() - 1])
        } else {
            (e.path[1], e.path[0])
        };
        ctx.place(penultimate, sp.middle_pos)?;
        ctx.forb.push(sp.middle_pos);
        ctx.place(terminus, sp.terminus_pos)?;
        ctx.root_pos[sp.son] = Some(sp.terminus_pos);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Very few leaves: reduce, embed the stubs, reconstruct
// ---------------------------------------------------------------------------

fn slice_unused(used: &[bool], count: usize) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(count);
    for v in 0..used.len() {
        if !used[v] {
            out.push(v);
            if out.len() == count {
                return Some(out);
            }
        }
    }
    None
}

/// Embeds any non-path tree with k >= 3 leaves into a host of order at
/// least `n + 144k^2 - 280k + 124`: reduce to a forest of stubs, embed the
/// components sequentially in still-unused vertices, then rebuild each
/// broken segment with a two-set path search (inner) or an origin-set path
/// search (outer), dropping the unused fork points.
///
/// Components that come out of the reduction with fewer than 6 leaves fall
/// outside the stub machinery's arity; they are routed to the bi-arborescence
/// or few/many-leaves procedures, whose bounds the very-few budget dwarfs at
/// this scale.
pub fn embed_very_few_leaves(a: &OrientedTree, t: &Tournament) -> Result<Embedding> {
    let n = a.node_count();
    let k = a.leaf_count();
    if a.is_path() || k < 3 {
        return Err(Error::Precondition("needs a non-path with at least 3 leaves; paths go to the few-leaves routine".into()));
    }
    if t.order() < very_few_bound(a) {
        return Err(Error::Precondition(format!(
            "host order {} below the very-few bound {}",
            t.order(),
            very_few_bound(a)
        )));
    }
    let red = reduce_to_stubs(a)?;
    let hard = |msg: &str, ctx: String| {
        Error::internal(
            msg.to_string(),
            FailureDump {
                tournament: t.to_file_text(),
                tree: a.to_file_text(),
                ordering: String::new(),
                context: ctx,
            },
        )
    };

    let mut used = vec![false; t.order()];
    let mut phi = Embedding::new(n);
    // images of the fork points, per (break, which)
    let mut point_vertex: std::collections::HashMap<(BreakRef, u8), usize> = Default::default();

    for (ci, comp) in red.components.iter().enumerate() {
        let ctree = &comp.tree;
        let kc = ctree.leaf_count();
        let host_order = if kc >= 6 {
            stub_bound(ctree)
        } else if ctree.bi_arborescence_root().is_some() {
            tree_embed::bi_arborescence_bound(ctree)?
        } else {
            tree_embed::few_leaves_bound(ctree).min(tree_embed::many_leaves_bound(ctree))
        };
        let verts = slice_unused(&used, host_order)
            .ok_or_else(|| hard("ran out of host vertices for a component", format!("component {ci}")))?;
        let sub = t.induced(&verts);
        let local_phi = if kc >= 6 {
            let sigma = local_median_order(&sub);
            embed_stub(ctree, &sub, &sigma)?
        } else if ctree.bi_arborescence_root().is_some() {
            tree_embed::embed_bi_arborescence(ctree, &sub)?
        } else if tree_embed::few_leaves_bound(ctree) <= tree_embed::many_leaves_bound(ctree) {
            tree_embed::embed_few_leaves(ctree, &sub)?
        } else {
            tree_embed::embed_many_leaves(ctree, &sub)?
        };
        for (local, role) in comp.roles.iter().enumerate() {
            let gv = verts[local_phi.get(local).expect("component embedding total")];
            used[gv] = true;
            match *role {
                Role::Original(orig) => phi.set(orig, gv),
                Role::Point { break_ref, which, .. } => {
                    point_vertex.insert((break_ref, which), gv);
                }
            }
        }
    }

    // Step 1: reconstruct the breakable inner segments
    for (bi, ib) in red.inner_breaks.iter().enumerate() {
        let fresh = ib.remainder_roles.len() - 2;
        let u = slice_unused(&used, fresh)
            .ok_or_else(|| hard("ran out of vertices for an inner remainder", format!("break {bi}")))?;
        let xs = [
            point_vertex[&(BreakRef::Inner(bi, false), 0)],
            point_vertex[&(BreakRef::Inner(bi, false), 1)],
        ];
        let ys = [
            point_vertex[&(BreakRef::Inner(bi, true), 0)],
            point_vertex[&(BreakRef::Inner(bi, true), 1)],
        ];
        let mut verts: Vec<usize> = u.iter().copied().chain(xs).chain(ys).collect();
        verts.sort_unstable();
        let local = |v: usize| verts.binary_search(&v).expect("vertex in window");
        let sub = t.induced(&verts);
        let path = find_path_between_sets(
            &sub,
            &[local(xs[0]), local(xs[1])],
            &[local(ys[0]), local(ys[1])],
            &ib.remainder_type,
            usize::MAX,
        )?;
        let gpath: Vec<usize> = path.iter().map(|&lv| verts[lv]).collect();
        if gpath.len() != ib.remainder_roles.len() {
            return Err(hard("remainder length mismatch", format!("break {bi}")));
        }
        for (&node, &gv) in ib.remainder_roles.iter().zip(&gpath) {
            phi.set(node, gv);
            used[gv] = true;
        }
        // free the two unused points
        for (end, wanted) in [(false, gpath[0]), (true, *gpath.last().unwrap())] {
            for which in 0..2u8 {
                let pv = point_vertex[&(BreakRef::Inner(bi, end), which)];
                if pv != wanted {
                    used[pv] = false;
                }
            }
        }
    }

    // Step 2: complete the long outer segments
    for (oi, or) in red.outer_replacements.iter().enumerate() {
        let fresh = or.remainder_roles.len() - 1;
        let u = slice_unused(&used, fresh)
            .ok_or_else(|| hard("ran out of vertices for an outer remainder", format!("outer {oi}")))?;
        let xs = [
            point_vertex[&(BreakRef::Outer(oi), 0)],
            point_vertex[&(BreakRef::Outer(oi), 1)],
        ];
        let mut verts: Vec<usize> = u.iter().copied().chain(xs).collect();
        verts.sort_unstable();
        let local = |v: usize| verts.binary_search(&v).expect("vertex in window");
        let sub = t.induced(&verts);
        let path =
            find_path_origin_set(&sub, &[local(xs[0]), local(xs[1])], &or.remainder_type, usize::MAX)?;
        let gpath: Vec<usize> = path.iter().map(|&lv| verts[lv]).collect();
        if gpath.len() != or.remainder_roles.len() {
            return Err(hard("remainder length mismatch", format!("outer {oi}")));
        }
        for (&node, &gv) in or.remainder_roles.iter().zip(&gpath) {
            phi.set(node, gv);
            used[gv] = true;
        }
        for which in 0..2u8 {
            let pv = point_vertex[&(BreakRef::Outer(oi), which)];
            if pv != gpath[0] {
                used[pv] = false;
            }
        }
    }

    let viols = verify_embedding(a, t, &phi)?;
    if !viols.is_empty() {
        return Err(hard("very-few-leaves embedding failed verification", format!("{}", viols[0])));
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{for_each_oriented_tree, oriented_tree_canonical, trees_isomorphic};

    fn spider3() -> OrientedTree {
        // center 0 with legs 0->1, 0->2->3 (directed), 4->0
        OrientedTree::from_arcs(5, vec![(0, 1), (0, 2), (2, 3), (4, 0)]).unwrap()
    }

    #[test]
    fn path_type_basics() {
        let p = PathType::new(Sign::Plus, vec![2, 1]).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.order(), 4);
        assert!(p.arc_forward(0) && p.arc_forward(1) && !p.arc_forward(2));
        assert_eq!(p.opposite(), PathType::new(Sign::Plus, vec![1, 2]).unwrap());
        let q = PathType::new(Sign::Plus, vec![2]).unwrap();
        assert_eq!(q.opposite(), PathType::new(Sign::Minus, vec![2]).unwrap());
    }

    #[test]
    fn segments_star_and_spider() {
        let star = OrientedTree::out_star(4);
        let segs = segments(&star).unwrap();
        assert_eq!(segs.len(), 3);
        assert!(segs.iter().all(|s| !s.inner && s.len() == 1));

        let sp = spider3();
        let segs = segments(&sp).unwrap();
        let long: Vec<_> = segs.iter().filter(|s| s.len() == 2).collect();
        assert_eq!(long.len(), 1);
        assert_eq!(long[0].ptype, PathType::new(Sign::Plus, vec![2]).unwrap());
    }

    #[test]
    fn segments_double_star() {
        // two branch nodes joined by an arc
        let a = OrientedTree::from_arcs(6, vec![(0, 1), (2, 0), (0, 3), (3, 4), (3, 5)]).unwrap();
        let segs = segments(&a).unwrap();
        let inner: Vec<_> = segs.iter().filter(|s| s.inner).collect();
        assert_eq!(inner.len(), 2); // both directions of the single inner segment
        assert_eq!(inner[0].len(), 1);
        assert!(segments(&OrientedTree::directed_path(5)).is_err());
    }

    #[test]
    fn stub_checks() {
        assert!(is_stub(&OrientedTree::out_star(4)).unwrap().0);
        let sp = spider3();
        let (ok, why) = is_stub(&sp).unwrap();
        assert!(!ok);
        assert!(why.contains("outer"));
        // inner segment of type +(2,2) between two branch nodes
        let a = OrientedTree::from_arcs(
            10,
            vec![(1, 0), (0, 2), (0, 3), (3, 4), (9, 4), (5, 9), (6, 5), (5, 7), (5, 8)],
        )
        .unwrap();
        let (ok, why) = is_stub(&a).unwrap();
        assert!(!ok, "{why}");
        assert!(why.contains("inner"));
    }

    #[test]
    fn stump_cases() {
        let cases = [
            (PathType::new(Sign::Plus, vec![3]).unwrap(), PathType::new(Sign::Plus, vec![2]).unwrap(), StumpCase::TrimFirstBlock),
            (PathType::new(Sign::Plus, vec![2, 1, 3]).unwrap(), PathType::new(Sign::Plus, vec![2]).unwrap(), StumpCase::KeepFirstBlock),
            (PathType::new(Sign::Minus, vec![1, 1, 1, 4]).unwrap(), PathType::new(Sign::Minus, vec![1, 1]).unwrap(), StumpCase::TwoUnitBlocks),
            (PathType::new(Sign::Plus, vec![1, 3]).unwrap(), PathType::new(Sign::Plus, vec![1, 2]).unwrap(), StumpCase::UnitThenTrimmed),
            (PathType::new(Sign::Plus, vec![1, 1, 1, 1, 1]).unwrap(), PathType::new(Sign::Plus, vec![1, 1]).unwrap(), StumpCase::TwoUnitBlocks),
            (PathType::new(Sign::Minus, vec![1, 1, 1, 1, 1]).unwrap(), PathType::new(Sign::Minus, vec![1]).unwrap(), StumpCase::SingleArc),
            (PathType::new(Sign::Minus, vec![2, 1, 3]).unwrap(), PathType::new(Sign::Minus, vec![1]).unwrap(), StumpCase::TrimFirstBlock),
        ];
        for (input, expect, case) in cases {
            let (got, got_case) = stump_type(&input).unwrap();
            assert_eq!(got, expect, "{input:?}");
            assert_eq!(got_case, case, "{input:?}");
        }
        assert!(stump_type(&PathType::new(Sign::Plus, vec![1]).unwrap()).is_err());
    }

    #[test]
    fn stump_type_total_coverage() {
        // every type of length 2..=10 matches exactly one case and the
        // result is well-formed
        fn compositions(total: usize) -> Vec<Vec<usize>> {
            if total == 0 {
                return vec![vec![]];
            }
            let mut out = vec![];
            for first in 1..=total {
                for mut rest in compositions(total - first) {
                    rest.insert(0, first);
                    out.push(rest);
                }
            }
            out
        }
        let mut count = 0;
        for len in 2..=10 {
            for blocks in compositions(len) {
                for sign in [Sign::Plus, Sign::Minus] {
                    let p = PathType::new(sign, blocks.clone()).unwrap();
                    let (stump, _) = stump_type(&p).unwrap();
                    assert!(stump.len() >= 1 && stump.len() < p.len() + 1);
                    count += 1;
                }
            }
        }
        assert_eq!(count, 2 * (2u32.pow(9) * 2 - 2 - (1 << 9)) as usize + 2 * 512); // 2 * sum_{len=2..10} 2^(len-1)
    }

    #[test]
    fn fork_shapes() {
        let f = make_fork(&PathType::new(Sign::Plus, vec![1]).unwrap());
        assert_eq!(f.tree.node_count(), 3);
        assert!(f.tree.has_arc(0, 1) && f.tree.has_arc(0, 2));
        let f = make_fork(&PathType::new(Sign::Plus, vec![2]).unwrap());
        assert!(f.tree.has_arc(0, 1) && f.tree.has_arc(1, 2) && f.tree.has_arc(1, 3));
        let f = make_fork(&PathType::new(Sign::Minus, vec![1, 1]).unwrap());
        // both origin-to-point paths have type -(1,1)
        for point in [f.points.0, f.points.1] {
            assert!(f.tree.has_arc(1, 0) && f.tree.has_arc(1, point));
        }
    }

    #[test]
    fn reduction_on_a_stub_is_identity_like() {
        let star = OrientedTree::out_star(5);
        let red = reduce_to_stubs(&star).unwrap();
        assert_eq!(red.b, 0);
        assert_eq!(red.components.len(), 1);
        assert!(red.inner_breaks.is_empty() && red.outer_replacements.is_empty());
        assert!(trees_isomorphic(&red.components[0].tree, &star));
    }

    #[test]
    fn reduction_spider_leg() {
        let sp = spider3();
        let red = reduce_to_stubs(&sp).unwrap();
        assert_eq!(red.b, 0);
        assert_eq!(red.outer_replacements.len(), 1);
        let rebuilt = rebuild_abstract(&red);
        assert!(trees_isomorphic(&rebuilt, &sp));
    }

    #[test]
    fn reduction_breakable_inner() {
        // inner segment of type +(2,2) between two branch nodes: b = 1
        let a = OrientedTree::from_arcs(
            10,
            vec![(1, 0), (0, 2), (0, 3), (3, 4), (9, 4), (5, 9), (6, 5), (5, 7), (5, 8)],
        )
        .unwrap();
        let red = reduce_to_stubs(&a).unwrap();
        assert_eq!(red.b, 1);
        assert_eq!(red.components.len(), 2);
        let rebuilt = rebuild_abstract(&red);
        assert!(trees_isomorphic(&rebuilt, &a));
    }

    #[test]
    fn reduction_round_trip_small() {
        for n in 4..=9 {
            for_each_oriented_tree(n, |a| {
                if a.is_path() || a.leaf_count() < 3 {
                    return;
                }
                let red = reduce_to_stubs(a).unwrap();
                assert_eq!(red.components.len(), red.b + 1);
                let total: usize = red.components.iter().map(|c| c.tree.node_count()).sum();
                assert!(total <= n + red.b, "|B| bound for {a:?}");
                let k = a.leaf_count();
                for c in &red.components {
                    assert!(c.tree.leaf_count() <= 2 * k - 2 * red.b, "component leaves for {a:?}");
                }
                for ib in &red.inner_breaks {
                    assert_ne!(ib.remainder_type.blocks, vec![1, 1, 1]);
                    assert_eq!(ib.remainder_type.blocks[0], 1);
                    assert_eq!(*ib.remainder_type.blocks.last().unwrap(), 1);
                }
                let rebuilt = rebuild_abstract(&red);
                assert_eq!(oriented_tree_canonical(&rebuilt), oriented_tree_canonical(a), "{a:?}");
            });
        }
    }

    #[test]
    fn two_out_paths_small() {
        let t = Tournament::transitive(4);
        let sigma = Ordering::identity(4);
        let paths = two_out_paths(&t, &sigma, 1).unwrap();
        assert_eq!(paths.len(), 1);
        let [a, b, c] = paths[0];
        assert!(t.has_arc(a, b) && t.has_arc(b, c));
        assert_eq!(a, 0);
    }

    #[test]
    fn two_out_paths_random() {
        for seed in 0..60u64 {
            let kk = 2 + (seed as usize) % 5;
            let m = 4 * kk + (seed as usize) % 10;
            let t = Tournament::random(m, seed);
            let sigma = local_median_order(&t);
            let paths = two_out_paths(&t, &sigma, kk).unwrap();
            assert_eq!(paths.len(), kk);
            let mut middles = std::collections::HashSet::new();
            let mut ends = std::collections::HashSet::new();
            let mut pos = vec![0; m];
            for (i, &v) in sigma.perm().iter().enumerate() {
                pos[v] = i;
            }
            for &[a, b, c] in &paths {
                assert_eq!(a, sigma.vertex_at(0));
                assert!(t.has_arc(a, b) && t.has_arc(b, c));
                assert!(middles.insert(b), "middles must be distinct");
                assert!(ends.insert(c), "termini must be distinct");
                assert!(pos[c] >= m - 4 * kk + 1, "terminus in the suffix zone");
            }
        }
    }

    #[test]
    fn two_out_paths_minimal_window() {
        for kk in 2..=6usize {
            for seed in 0..200u64 {
                let t = Tournament::random(4 * kk, seed);
                let sigma = local_median_order(&t);
                let paths = two_out_paths(&t, &sigma, kk).unwrap();
                assert_eq!(paths.len(), kk);
            }
        }
    }

    #[test]
    fn origin_set_search() {
        // +(2) in TT4: with a 3-vertex origin set a copy always exists
        let t = Tournament::transitive(4);
        let tau = PathType::new(Sign::Plus, vec![2]).unwrap();
        let p = find_path_origin_set(&t, &[1, 2, 3], &tau, DEFAULT_PATH_SEARCH_CAP).unwrap();
        assert!(t.has_arc(p[0], p[1]) && t.has_arc(p[1], p[2]));
        assert!([1, 2, 3].contains(&p[0]));
        // origin set too small for b1+1
        assert!(matches!(
            find_path_origin_set(&t, &[3, 2], &tau, 24),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn origin_set_random_types() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let len = 1 + rng.gen_range(0..8usize);
            let dirs: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
            let tau = PathType::from_dirs(&dirs).unwrap();
            let t = Tournament::random(tau.order() + 1, rng.gen());
            let x: Vec<usize> = (0..tau.blocks[0] + 1).collect();
            let p = find_path_origin_set(&t, &x, &tau, DEFAULT_PATH_SEARCH_CAP).unwrap();
            for (j, w) in p.windows(2).enumerate() {
                if tau.arc_forward(j) {
                    assert!(t.has_arc(w[0], w[1]));
                } else {
                    assert!(t.has_arc(w[1], w[0]));
                }
            }
        }
    }

    #[test]
    fn between_sets_search() {
        let tau = PathType::new(Sign::Plus, vec![1, 1]).unwrap();
        for seed in 0..80u64 {
            let t = Tournament::random(5, seed);
            let p = find_path_between_sets(&t, &[0, 1], &[3, 4], &tau, 24).unwrap();
            assert!([0, 1].contains(&p[0]));
            assert!([3, 4].contains(p.last().unwrap()));
            assert!(t.has_arc(p[0], p[1]) && t.has_arc(p[2], p[1]));
        }
        // the excluded type
        let bad = PathType::new(Sign::Plus, vec![1, 1, 1]).unwrap();
        let t = Tournament::random(6, 0);
        assert!(matches!(
            find_path_between_sets(&t, &[0, 1], &[3, 4], &bad, 24),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn between_sets_random_types() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut done = 0;
        while done < 200 {
            let mid = 1 + rng.gen_range(0..5usize);
            let blocks = {
                let mut b = vec![1usize];
                let mut rest = mid;
                while rest > 0 {
                    let x = 1 + rng.gen_range(0..rest);
                    b.push(x);
                    rest -= x;
                }
                b.push(1);
                b
            };
            let tau = PathType { sign: if rng.gen() { Sign::Plus } else { Sign::Minus }, blocks };
            if tau.blocks == vec![1, 1, 1] || tau.is_directed() {
                continue;
            }
            let order = tau.order();
            let t = Tournament::random(order + 2, rng.gen());
            let x = [0usize, 1];
            let y = [2usize, 3];
            let p = find_path_between_sets(&t, &x, &y, &tau, 24).unwrap();
            assert!(x.contains(&p[0]) && y.contains(p.last().unwrap()));
            done += 1;
        }
    }

    fn smallest_stub() -> OrientedTree {
        // two adjacent branch nodes, each with three unit legs: n=8, k=6
        OrientedTree::from_arcs(
            8,
            vec![(0, 1), (0, 2), (3, 0), (0, 4), (4, 5), (6, 4), (4, 7)],
        )
        .unwrap()
    }

    #[test]
    fn islands_of_smallest_stub() {
        let a = smallest_stub();
        assert!(is_stub(&a).unwrap().0);
        assert_eq!(a.leaf_count(), 6);
        let m = stub_bound(&a);
        assert_eq!(m, 8 + 36 * 36 - 140 * 6 + 124);
        let lay = islands_layout(&a, m).unwrap();
        assert_eq!(lay.islands.len(), 1);
        assert_eq!(lay.spc.iter().sum::<usize>(), lay.regions[0].end);
    }

    #[test]
    fn islands_with_long_connection() {
        // two 3-leg branch nodes joined by a directed path of length 5
        let mut arcs = vec![(0, 1), (2, 0), (0, 3)];
        // path 3 -> 4 -> 5 -> 6 -> 7 wait: keep leg (0,3) unit; join via 0 -> 8 -> ...
        arcs.clear();
        arcs.extend([(0, 1), (2, 0), (3, 0)]);
        arcs.extend([(0, 4), (4, 5), (5, 6), (6, 7), (7, 8)]); // length-5 directed run
        arcs.extend([(8, 9), (10, 8), (8, 11)]);
        let a = OrientedTree::from_arcs(12, arcs).unwrap();
        assert!(is_stub(&a).unwrap().0, "{:?}", is_stub(&a).unwrap().1);
        assert_eq!(a.leaf_count(), 6);
        let lay = islands_layout(&a, stub_bound(&a)).unwrap();
        assert_eq!(lay.islands.len(), 2);
        assert_eq!(lay.arcs.len(), 1);
        assert_eq!(lay.arcs[0].q_len(), 4); // |P| = 6 vertices, drop last two
        assert_eq!(lay.bfs_order, vec![0, 1]);
    }

    #[test]
    fn embed_smallest_stub() {
        let a = smallest_stub();
        let m = stub_bound(&a);
        for seed in 0..6u64 {
            let t = Tournament::random(m, seed);
            let sigma = local_median_order(&t);
            let phi = embed_stub(&a, &t, &sigma).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn embed_stub_with_connections() {
        let mut arcs = vec![(0, 1), (2, 0), (3, 0)];
        arcs.extend([(0, 4), (4, 5), (5, 6), (6, 7), (7, 8)]);
        arcs.extend([(8, 9), (10, 8), (8, 11)]);
        let a = OrientedTree::from_arcs(12, arcs).unwrap();
        let m = stub_bound(&a);
        for seed in 0..4u64 {
            let t = Tournament::random(m, seed);
            let sigma = local_median_order(&t);
            let phi = embed_stub(&a, &t, &sigma).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty(), "seed {seed}");
        }
    }

    #[test]
    fn embed_stub_structured_hosts() {
        let a = smallest_stub();
        let m = stub_bound(&a);
        let t = Tournament::transitive(m);
        let sigma = local_median_order(&t);
        let phi = embed_stub(&a, &t, &sigma).unwrap();
        assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty());
        // rotational host of odd order >= m
        let mm = if m % 2 == 0 { m + 1 } else { m };
        let residues: Vec<usize> = (1..=(mm - 1) / 2).collect();
        let t = Tournament::rotational(mm, &residues).unwrap();
        let sigma = local_median_order(&t);
        let phi = embed_stub(&a, &t, &sigma).unwrap();
        assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty());
    }

    #[test]
    fn embed_stub_with_downward_connection() {
        // three islands X -> Y <- Z: the middle island receives both paths,
        // so Z hangs below Y through a downward arc (the dual machinery)
        let arcs = vec![
            (0, 1),
            (2, 0),
            (0, 3),
            (3, 4),
            (4, 5), // X -> Y run of length 3
            (5, 6),
            (7, 5),
            (8, 9),
            (10, 8),
            (8, 11),
            (11, 12),
            (12, 5), // Z -> Y run of length 3
        ];
        let a = OrientedTree::from_arcs(13, arcs).unwrap();
        assert!(is_stub(&a).unwrap().0);
        assert_eq!(a.leaf_count(), 6);
        let lay = islands_layout(&a, stub_bound(&a)).unwrap();
        assert_eq!(lay.islands.len(), 3);
        for seed in 0..4u64 {
            let t = Tournament::random(stub_bound(&a), seed);
            let sigma = local_median_order(&t);
            let phi = embed_stub(&a, &t, &sigma).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty(), "seed {seed}");
        }
    }

    /// Random stub: a chain of branch clusters joined by directed runs of
    /// length >= 3 in random directions, with unit legs padding the leaf
    /// count.
    pub(crate) fn random_stub(rng: &mut impl rand::Rng) -> OrientedTree {
        let clusters = 1 + rng.gen_range(0..2usize);
        let mut arcs: Vec<(usize, usize)> = vec![];
        let mut next = 0usize;
        let mut centers = vec![];
        let mut new_node = |next: &mut usize| {
            let x = *next;
            *next += 1;
            x
        };
        for c in 0..clusters {
            let center = new_node(&mut next);
            centers.push(center);
            let legs = if clusters == 1 { 6 } else { 3 };
            for _ in 0..legs {
                let leaf = new_node(&mut next);
                if rng.gen() {
                    arcs.push((center, leaf));
                } else {
                    arcs.push((leaf, center));
                }
            }
            if c > 0 {
                // join to a previous cluster by a directed run
                let other = centers[rng.gen_range(0..c)];
                let len = 3 + rng.gen_range(0..4usize);
                let fwd = rng.gen::<bool>();
                let mut prev = if fwd { other } else { center };
                let target = if fwd { center } else { other };
                for _ in 0..len - 1 {
                    let mid = new_node(&mut next);
                    arcs.push((prev, mid));
                    prev = mid;
                }
                arcs.push((prev, target));
            }
        }
        OrientedTree::from_arcs(next, arcs).unwrap()
    }

    #[test]
    fn embed_stub_random_shapes() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut done = 0;
        while done < 5 {
            let a = random_stub(&mut rng);
            if !is_stub(&a).unwrap().0 || a.leaf_count() < 6 {
                continue;
            }
            let m = stub_bound(&a);
            let t = Tournament::random(m, rand::Rng::gen(&mut rng));
            let sigma = local_median_order(&t);
            let phi = embed_stub(&a, &t, &sigma).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty());
            done += 1;
        }
    }

    #[test]
    fn very_few_k4_small() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(22);
        for trial in 0..2 {
            let n = 9 + 4 * trial;
            let a = crate::enumerate::random_tree_with_leaves(n, 4, &mut rng);
            let t = Tournament::random(very_few_bound(&a), 2000 + trial as u64);
            let phi = embed_very_few_leaves(&a, &t).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty(), "trial {trial}");
        }
    }

    #[test]
    fn very_few_k3_small() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for trial in 0..3 {
            let n = 8 + 3 * trial;
            let a = crate::enumerate::random_tree_with_leaves(n, 3, &mut rng);
            let t = Tournament::random(very_few_bound(&a), 1000 + trial as u64);
            let phi = embed_very_few_leaves(&a, &t).unwrap();
            assert!(verify_embedding(&a, &t, &phi).unwrap().is_empty(), "trial {trial}");
        }
    }
}
