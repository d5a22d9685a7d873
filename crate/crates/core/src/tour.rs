use std::fmt;

use serde::{Deserialize, Serialize};

use crate::aav::Aav;
use crate::cost::{Cost, CostMatrix};
use crate::error::{Error, Result};
use crate::perm::Permutation;

/// A Hamiltonian cycle, stored as a visiting order starting at vertex 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tour {
    order: Vec<usize>,
}

impl Tour {
    /// Validates `order` as a permutation of `0..n` and rotates it to start at 0.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n {
                return Err(Error::VertexOutOfRange(v + 1));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidTour(format!("vertex {} repeated", v + 1)));
            }
        }
        if n < 3 {
            return Err(Error::InvalidTour(format!("only {n} vertices")));
        }
        let start = order.iter().position(|&v| v == 0).expect("0 present");
        let mut order = order;
        order.rotate_left(start);
        Ok(Tour { order })
    }

    /// Builds a tour from 1-based vertex ids.
    pub fn from_one_based(ids: &[usize]) -> Result<Self> {
        let order = ids
            .iter()
            .map(|&v| v.checked_sub(1).ok_or(Error::VertexOutOfRange(v)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(order)
    }

    /// The single n-cycle of a permutation, or an error if it has several cycles.
    pub fn from_permutation(p: &Permutation) -> Result<Self> {
        let n = p.len();
        let mut order = Vec::with_capacity(n);
        let mut v = 0;
        for _ in 0..n {
            order.push(v);
            v = p.image(v);
        }
        if v != 0 || p.cycles().len() != 1 || p.fixed_points().next().is_some() {
            return Err(Error::InvalidTour(format!("permutation has {} cycles", p.cycles().len())));
        }
        Self::new(order)
    }

    /// The identity-order tour `(1 2 ... n)`.
    pub fn identity(n: usize) -> Self {
        Tour { order: (0..n).collect() }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Successor map as a permutation.
    pub fn to_permutation(&self) -> Permutation {
        let n = self.order.len();
        let mut images = vec![0; n];
        for i in 0..n {
            images[self.order[i]] = self.order[(i + 1) % n];
        }
        Permutation::new(images).expect("a tour is a bijection")
    }

    /// Arcs `(order[i], order[i + 1])`, cyclically.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.order.len();
        (0..n).map(move |i| (self.order[i], self.order[(i + 1) % n]))
    }

    pub fn value(&self, m: &CostMatrix) -> Cost {
        self.arcs().map(|(a, b)| m.cost(a, b)).sum()
    }

    pub fn aav(&self, m: &CostMatrix) -> Aav {
        Aav::new(self.value(m), self.len())
    }

    pub fn reversed(&self) -> Tour {
        let mut order = self.order.clone();
        order[1..].reverse();
        Tour { order }
    }

    /// The same cycle written from `start`.
    pub fn rotated_to(&self, start: usize) -> Vec<usize> {
        let pos = self.order.iter().position(|&v| v == start).expect("vertex on tour");
        let mut out = self.order.clone();
        out.rotate_left(pos);
        out
    }

    /// 1-based vertex list.
    pub fn one_based(&self) -> Vec<usize> {
        self.order.iter().map(|v| v + 1).collect()
    }

    /// Orientation with the smaller second vertex; identifies undirected tours.
    pub fn canonical_undirected(&self) -> Tour {
        let r = self.reversed();
        if r.order < self.order {
            r
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for Tour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.order.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", v + 1)?;
        }
        write!(f, ")")
    }
}
