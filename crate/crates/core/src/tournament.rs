//! Tournaments with bit-row adjacency.
//!
//! A tournament on `n` vertices stores one bit row per vertex; row `u` has
//! bit `v` set iff the arc `u -> v` is present. Interval domination counts
//! reduce to masked popcounts over these rows, which is what the embedding
//! algorithms spend most of their time doing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bits;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq)]
pub struct Tournament {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl std::fmt::Debug for Tournament {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Tournament(n={})", self.n)
    }
}

impl Tournament {
    fn empty(n: usize) -> Self {
        let words = bits::words_for(n.max(1));
        Tournament { n, words, rows: vec![0; n * words] }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn out_row(&self, u: usize) -> &[u64] {
        &self.rows[u * self.words..(u + 1) * self.words]
    }

    #[inline]
    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        bits::get(self.out_row(u), v)
    }

    #[inline]
    fn set_arc(&mut self, u: usize, v: usize) {
        let w = self.words;
        bits::set(&mut self.rows[u * w..(u + 1) * w], v);
    }

    pub fn out_degree(&self, u: usize) -> usize {
        bits::count(self.out_row(u))
    }

    /// Out-neighbours of `u` within a vertex-set mask.
    pub fn out_in_set(&self, u: usize, mask: &[u64]) -> usize {
        bits::count_and(self.out_row(u), mask)
    }

    /// Builds a tournament from an explicit arc list; every unordered pair
    /// must be covered exactly once.
    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut t = Tournament::empty(n);
        for (u, v) in arcs {
            if u >= n || v >= n || u == v {
                return Err(Error::Invariant(format!("bad arc ({u},{v}) for order {n}")));
            }
            if t.has_arc(u, v) || t.has_arc(v, u) {
                return Err(Error::Invariant(format!("pair ({u},{v}) oriented twice")));
            }
            t.set_arc(u, v);
        }
        t.validate()?;
        Ok(t)
    }

    /// Checks irreflexivity, completeness and antisymmetry, and the
    /// out-degree sum identity.
    pub fn validate(&self) -> Result<()> {
        let mut sum = 0usize;
        for u in 0..self.n {
            if self.has_arc(u, u) {
                return Err(Error::Invariant(format!("loop at vertex {u}")));
            }
            sum += self.out_degree(u);
            for v in (u + 1)..self.n {
                let fwd = self.has_arc(u, v);
                let bwd = self.has_arc(v, u);
                if fwd == bwd {
                    return Err(Error::Invariant(format!(
                        "pair ({u},{v}) is {}",
                        if fwd { "oriented both ways" } else { "unoriented" }
                    )));
                }
            }
        }
        if sum != self.n * self.n.saturating_sub(1) / 2 {
            return Err(Error::Invariant("out-degree sum mismatch".into()));
        }
        Ok(())
    }

    /// Parses raw matrix rows (no header): `n` lines of `n` chars in {0,1},
    /// whitespace between characters ignored.
    pub fn from_matrix_text(text: &str) -> Result<Self> {
        let rows: Vec<Vec<u8>> = text
            .lines()
            .map(|l| l.split_whitespace().collect::<String>().into_bytes())
            .filter(|l| !l.is_empty())
            .collect();
        let n = rows.len();
        if n == 0 {
            return Err(Error::parse(1, "empty matrix"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::parse(
                    i + 1,
                    format!("matrix not square: row has {} cells, expected {n}", row.len()),
                ));
            }
        }
        let mut t = Tournament::empty(n);
        for (u, row) in rows.iter().enumerate() {
            for (v, &c) in row.iter().enumerate() {
                match c {
                    b'0' => {}
                    b'1' => {
                        if u == v {
                            return Err(Error::parse(u + 1, format!("diagonal cell ({u},{u}) is 1")));
                        }
                        t.set_arc(u, v);
                    }
                    _ => {
                        return Err(Error::parse(
                            u + 1,
                            format!("cell ({u},{v}) is {:?}, expected 0/1", c as char),
                        ))
                    }
                }
            }
        }
        for u in 0..n {
            for v in (u + 1)..n {
                if t.has_arc(u, v) && t.has_arc(v, u) {
                    return Err(Error::parse(u + 1, format!("not antisymmetric at cell ({u},{v})")));
                }
                if !t.has_arc(u, v) && !t.has_arc(v, u) {
                    return Err(Error::parse(u + 1, format!("pair ({u},{v}) unoriented (both cells 0)")));
                }
            }
        }
        Ok(t)
    }

    /// File format: line 1 is `n`, then `n` matrix rows.
    pub fn from_file_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
        let n: usize = first
            .trim()
            .parse()
            .map_err(|_| Error::parse(1, format!("expected vertex count, got {first:?}")))?;
        let rest: String = lines.collect::<Vec<_>>().join("\n");
        let t = Tournament::from_matrix_text(&rest)
            .map_err(|e| match e {
                Error::Parse { line, msg } => Error::Parse { line: line + 1, msg },
                other => other,
            })?;
        if t.order() != n {
            return Err(Error::parse(1, format!("header says {n} vertices, matrix has {}", t.order())));
        }
        Ok(t)
    }

    pub fn to_file_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for u in 0..self.n {
            for v in 0..self.n {
                s.push(if self.has_arc(u, v) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    /// `u -> v` iff `u < v`.
    pub fn transitive(n: usize) -> Self {
        let mut t = Tournament::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                t.set_arc(u, v);
            }
        }
        t
    }

    /// Rotational tournament: `u -> v` iff `(v - u) mod n` lies in the
    /// residue set. Needs `|S| = (n-1)/2` and `S` disjoint from `-S`.
    pub fn rotational(n: usize, residues: &[usize]) -> Result<Self> {
        if n == 0 || n % 2 == 0 {
            return Err(Error::Precondition(format!("rotational order must be odd, got {n}")));
        }
        let mut seen = vec![false; n];
        for &s in residues {
            if s == 0 || s >= n {
                return Err(Error::Precondition(format!("residue {s} out of range 1..{n}")));
            }
            if seen[s] {
                return Err(Error::Precondition(format!("duplicate residue {s}")));
            }
            seen[s] = true;
        }
        if residues.len() != (n - 1) / 2 {
            return Err(Error::Precondition(format!(
                "need {} residues for order {n}, got {}",
                (n - 1) / 2,
                residues.len()
            )));
        }
        for &s in residues {
            if seen[n - s] {
                return Err(Error::Precondition(format!("residues contain both {s} and {}", n - s)));
            }
        }
        let mut t = Tournament::empty(n);
        for u in 0..n {
            for &s in residues {
                t.set_arc(u, (u + s) % n);
            }
        }
        t.validate()?;
        Ok(t)
    }

    /// Paley tournament: quadratic residues mod a prime `n = 3 (mod 4)`.
    pub fn paley(n: usize) -> Result<Self> {
        if !is_prime(n) || n % 4 != 3 {
            return Err(Error::Precondition(format!("paley order must be a prime = 3 mod 4, got {n}")));
        }
        let mut residues: Vec<usize> = (1..n).map(|x| x * x % n).collect();
        residues.sort_unstable();
        residues.dedup();
        Tournament::rotational(n, &residues)
    }

    /// Seeded random tournament: one coin per unordered pair in lexicographic
    /// order; heads orients `u -> v` with `u < v`.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Tournament::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen::<bool>() {
                    t.set_arc(u, v);
                } else {
                    t.set_arc(v, u);
                }
            }
        }
        t
    }

    /// Reverses every arc. Involution.
    pub fn reverse(&self) -> Self {
        let mut t = Tournament::empty(self.n);
        for u in 0..self.n {
            for v in 0..self.n {
                if u != v && self.has_arc(u, v) {
                    t.set_arc(v, u);
                }
            }
        }
        t
    }

    /// Induced subtournament; vertex `i` of the result is `verts[i]`.
    pub fn induced(&self, verts: &[usize]) -> Self {
        let mut t = Tournament::empty(verts.len());
        for (i, &u) in verts.iter().enumerate() {
            for (j, &v) in verts.iter().enumerate() {
                if i != j && self.has_arc(u, v) {
                    t.set_arc(i, j);
                }
            }
        }
        t
    }
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_c3() {
        let t = Tournament::from_matrix_text("010\n001\n100").unwrap();
        assert!(t.has_arc(0, 1) && t.has_arc(1, 2) && t.has_arc(2, 0));
    }

    #[test]
    fn parse_with_spaces() {
        let t = Tournament::from_matrix_text("0 1 0\n0 0 1\n1 0 0").unwrap();
        assert!(t.has_arc(0, 1) && t.has_arc(1, 2) && t.has_arc(2, 0));
    }

    #[test]
    fn reject_symmetric_pair() {
        let err = Tournament::from_matrix_text("01\n10").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("antisymmetric"), "{msg}");
        let err = Tournament::from_matrix_text("00\n00").unwrap_err();
        assert!(format!("{err}").contains("(0,1)"));
    }

    #[test]
    fn reject_diagonal() {
        assert!(Tournament::from_matrix_text("10\n00").is_err());
    }

    #[test]
    fn reject_non_square() {
        assert!(Tournament::from_matrix_text("01\n0").is_err());
    }

    #[test]
    fn paley7_is_regular_rotational() {
        let p = Tournament::paley(7).unwrap();
        let r = Tournament::rotational(7, &[1, 2, 4]).unwrap();
        assert_eq!(p, r);
        for u in 0..7 {
            assert_eq!(p.out_degree(u), 3);
        }
    }

    #[test]
    fn rotational5_regular() {
        let t = Tournament::rotational(5, &[1, 2]).unwrap();
        for u in 0..5 {
            assert_eq!(t.out_degree(u), 2);
        }
    }

    #[test]
    fn rotational_rejects_bad_residues() {
        assert!(Tournament::rotational(5, &[1, 4]).is_err());
        assert!(Tournament::rotational(5, &[1]).is_err());
        assert!(Tournament::paley(5).is_err());
        assert!(Tournament::paley(9).is_err());
    }

    #[test]
    fn transitive_shape() {
        let t = Tournament::transitive(4);
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(t.has_arc(u, v), u < v);
            }
        }
    }

    #[test]
    fn reverse_involution() {
        let t = Tournament::random(17, 3);
        assert_eq!(t.reverse().reverse(), t);
        t.reverse().validate().unwrap();
    }

    #[test]
    fn random_deterministic_and_valid() {
        let a = Tournament::random(20, 7);
        let b = Tournament::random(20, 7);
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_ne!(a, Tournament::random(20, 8));
    }

    #[test]
    fn file_round_trip() {
        let t = Tournament::random(9, 1);
        let back = Tournament::from_file_text(&t.to_file_text()).unwrap();
        assert_eq!(t, back);
    }
}
