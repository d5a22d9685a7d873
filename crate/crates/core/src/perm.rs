use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// A bijection on `0..n` with a lazily cached cycle decomposition.
#[derive(Clone)]
pub struct Permutation {
    images: Vec<usize>,
    cycles: OnceLock<Vec<Vec<usize>>>,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &b in &images {
            if b >= n {
                return Err(Error::NotAPermutation { n, detail: format!("image {} out of range", b + 1) });
            }
            if std::mem::replace(&mut seen[b], true) {
                return Err(Error::NotAPermutation { n, detail: format!("image {} repeated", b + 1) });
            }
        }
        Ok(Permutation { images, cycles: OnceLock::new() })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect(), cycles: OnceLock::new() }
    }

    /// The n-cycle `(0 1 ... n-1)`.
    pub fn rotation(n: usize) -> Self {
        Permutation { images: (0..n).map(|a| (a + 1) % n).collect(), cycles: OnceLock::new() }
    }

    /// Builds a permutation from disjoint cycles; unlisted points are fixed.
    pub fn from_cycles(n: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut used = vec![false; n];
        for c in cycles {
            for (i, &a) in c.iter().enumerate() {
                if a >= n {
                    return Err(Error::VertexOutOfRange(a + 1));
                }
                if std::mem::replace(&mut used[a], true) {
                    return Err(Error::RepeatedVertex(a + 1));
                }
                images[a] = c[(i + 1) % c.len()];
            }
        }
        Self::new(images)
    }

    /// Like [`Permutation::from_cycles`] with 1-based vertex ids.
    pub fn from_cycles_one_based(n: usize, cycles: &[&[usize]]) -> Result<Self> {
        let cs: Vec<Vec<usize>> = cycles.iter().map(|c| c.iter().map(|&v| v - 1).collect()).collect();
        Self::from_cycles(n, &cs)
    }

    #[inline]
    pub fn image(&self, a: usize) -> usize {
        self.images[a]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.images.len()];
        for (a, &b) in self.images.iter().enumerate() {
            inv[b] = a;
        }
        Permutation { images: inv, cycles: OnceLock::new() }
    }

    /// Nontrivial cycles, each starting at its smallest point, ordered by that point.
    pub fn cycles(&self) -> &[Vec<usize>] {
        self.cycles.get_or_init(|| {
            let n = self.images.len();
            let mut seen = vec![false; n];
            let mut out = Vec::new();
            for start in 0..n {
                if seen[start] || self.images[start] == start {
                    seen[start] = true;
                    continue;
                }
                let mut c = Vec::new();
                let mut v = start;
                while !seen[v] {
                    seen[v] = true;
                    c.push(v);
                    v = self.images[v];
                }
                out.push(c);
            }
            out
        })
    }

    pub fn fixed_points(&self) -> impl Iterator<Item = usize> + '_ {
        self.images.iter().enumerate().filter(|&(a, &b)| a == b).map(|(a, _)| a)
    }

    pub fn is_derangement(&self) -> bool {
        self.fixed_points().next().is_none()
    }

    pub fn is_involution(&self) -> bool {
        self.images.iter().enumerate().all(|(a, &b)| self.images[b] == a)
    }

    /// Index of the cycle containing each point; fixed points get `None`.
    pub fn cycle_index(&self) -> Vec<Option<usize>> {
        let mut idx = vec![None; self.images.len()];
        for (k, c) in self.cycles().iter().enumerate() {
            for &a in c {
                idx[a] = Some(k);
            }
        }
        idx
    }
}

/// The map `a -> outer(inner(a))`.
pub fn compose(outer: &Permutation, inner: &Permutation) -> Result<Permutation> {
    if outer.len() != inner.len() {
        return Err(Error::SizeMismatch { left: outer.len(), right: inner.len() });
    }
    let images = inner.images.iter().map(|&b| outer.images[b]).collect();
    Ok(Permutation { images, cycles: OnceLock::new() })
}

impl PartialEq for Permutation {
    fn eq(&self, other: &Self) -> bool {
        self.images == other.images
    }
}

impl Eq for Permutation {}

impl std::hash::Hash for Permutation {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.images.hash(state);
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{self}")
    }
}

/// Cycle notation with 1-based ids, `()` for the identity.
impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cycles().is_empty() {
            return write!(f, "()");
        }
        for c in self.cycles() {
            write!(f, "{}", format_cycle(c))?;
        }
        Ok(())
    }
}

/// `(a b c)` with 1-based ids.
pub fn format_cycle(nodes: &[usize]) -> String {
    let ids: Vec<String> = nodes.iter().map(|v| (v + 1).to_string()).collect();
    format!("({})", ids.join(" "))
}
