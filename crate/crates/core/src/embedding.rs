//! Partial node-to-vertex maps and the universal embedding checker.

use crate::error::{Error, Result};
use crate::tournament::Tournament;
use crate::tree::OrientedTree;

/// Injective partial map from tree nodes to tournament vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    assign: Vec<Option<usize>>,
}

impl Embedding {
    pub fn new(n_nodes: usize) -> Self {
        Embedding { assign: vec![None; n_nodes] }
    }

    pub fn from_pairs(n_nodes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut e = Embedding::new(n_nodes);
        for (node, vertex) in pairs {
            if node >= n_nodes {
                return Err(Error::Invariant(format!("node {node} out of range")));
            }
            if e.assign[node].is_some() {
                return Err(Error::Invariant(format!("node {node} assigned twice")));
            }
            e.assign[node] = Some(vertex);
        }
        Ok(e)
    }

    pub fn node_count(&self) -> usize {
        self.assign.len()
    }

    pub fn get(&self, node: usize) -> Option<usize> {
        self.assign[node]
    }

    pub fn set(&mut self, node: usize, vertex: usize) {
        debug_assert!(self.assign[node].is_none(), "node {node} already embedded");
        self.assign[node] = Some(vertex);
    }

    pub fn unset(&mut self, node: usize) {
        self.assign[node] = None;
    }

    pub fn is_total(&self) -> bool {
        self.assign.iter().all(|a| a.is_some())
    }

    pub fn assigned_count(&self) -> usize {
        self.assign.iter().filter(|a| a.is_some()).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assign.iter().enumerate().filter_map(|(i, a)| a.map(|v| (i, v)))
    }

    /// File format: one line `node vertex` per node.
    pub fn to_file_text(&self) -> String {
        let mut s = String::new();
        for (node, v) in self.iter() {
            s.push_str(&format!("{node} {v}\n"));
        }
        s
    }

    pub fn from_file_text(n_nodes: usize, text: &str) -> Result<Self> {
        let mut pairs = vec![];
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let node: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(i + 1, format!("bad embedding line {line:?}")))?;
            let vertex: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(i + 1, format!("bad embedding line {line:?}")))?;
            pairs.push((node, vertex));
        }
        Embedding::from_pairs(n_nodes, pairs)
    }
}

/// One entry per violated arc or collision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Collision { node_a: usize, node_b: usize, vertex: usize },
    BrokenArc { u: usize, v: usize, image_u: usize, image_v: usize },
    VertexOutOfRange { node: usize, vertex: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Collision { node_a, node_b, vertex } => {
                write!(f, "nodes {node_a} and {node_b} both map to vertex {vertex}")
            }
            Violation::BrokenArc { u, v, image_u, image_v } => {
                write!(f, "tree arc {u}->{v} maps to non-arc {image_u}->{image_v}")
            }
            Violation::VertexOutOfRange { node, vertex } => {
                write!(f, "node {node} maps to out-of-range vertex {vertex}")
            }
        }
    }
}

/// Empty result iff `phi` is a total, injective, arc-preserving embedding of
/// `a` into `t`. A non-total map is an error, distinct from violations.
pub fn verify_embedding(a: &OrientedTree, t: &Tournament, phi: &Embedding) -> Result<Vec<Violation>> {
    if phi.node_count() != a.node_count() {
        return Err(Error::Precondition(format!(
            "embedding covers {} nodes, tree has {}",
            phi.node_count(),
            a.node_count()
        )));
    }
    if !phi.is_total() {
        let missing: Vec<usize> =
            (0..a.node_count()).filter(|&u| phi.get(u).is_none()).collect();
        return Err(Error::Precondition(format!("embedding not total; unassigned nodes {missing:?}")));
    }
    let mut violations = vec![];
    let mut owner: Vec<Option<usize>> = vec![None; t.order()];
    for (node, v) in phi.iter() {
        if v >= t.order() {
            violations.push(Violation::VertexOutOfRange { node, vertex: v });
            continue;
        }
        if let Some(prev) = owner[v] {
            violations.push(Violation::Collision { node_a: prev, node_b: node, vertex: v });
        } else {
            owner[v] = Some(node);
        }
    }
    for &(u, v) in a.arcs() {
        let (iu, iv) = (phi.get(u).unwrap(), phi.get(v).unwrap());
        if iu >= t.order() || iv >= t.order() {
            continue;
        }
        if iu == iv || !t.has_arc(iu, iv) {
            violations.push(Violation::BrokenArc { u, v, image_u: iu, image_v: iv });
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_into_transitive() {
        let p3 = OrientedTree::directed_path(3);
        let tt3 = Tournament::transitive(3);
        let phi = Embedding::from_pairs(3, [(0, 0), (1, 1), (2, 2)]).unwrap();
        assert!(verify_embedding(&p3, &tt3, &phi).unwrap().is_empty());
    }

    #[test]
    fn reversed_host_breaks_arcs() {
        let p3 = OrientedTree::directed_path(3);
        let rt3 = Tournament::transitive(3).reverse();
        let phi = Embedding::from_pairs(3, [(0, 0), (1, 1), (2, 2)]).unwrap();
        let v = verify_embedding(&p3, &rt3, &phi).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|x| matches!(x, Violation::BrokenArc { .. })));
    }

    #[test]
    fn collision_detected() {
        let p3 = OrientedTree::directed_path(3);
        let tt3 = Tournament::transitive(3);
        let phi = Embedding::from_pairs(3, [(0, 0), (1, 1), (2, 1)]).unwrap();
        let v = verify_embedding(&p3, &tt3, &phi).unwrap();
        assert!(v.iter().any(|x| matches!(x, Violation::Collision { vertex: 1, .. })));
    }

    #[test]
    fn partial_map_is_error_not_violation() {
        let p3 = OrientedTree::directed_path(3);
        let tt3 = Tournament::transitive(3);
        let phi = Embedding::from_pairs(3, [(0, 0)]).unwrap();
        assert!(verify_embedding(&p3, &tt3, &phi).is_err());
    }

    #[test]
    fn file_round_trip() {
        let phi = Embedding::from_pairs(4, [(0, 3), (1, 0), (2, 2), (3, 1)]).unwrap();
        let back = Embedding::from_file_text(4, &phi.to_file_text()).unwrap();
        assert_eq!(phi, back);
    }
}
