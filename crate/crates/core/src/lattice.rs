//! Sites and finite box lattices.

use smallvec::SmallVec;

use crate::{Error, Result};

/// A lattice site, identified by its integer coordinates.
///
/// Sites order lexicographically by coordinates, which fixes the canonical
/// ordering used for term keys and for the dense basis.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site(SmallVec<[i32; 2]>);

impl Site {
    pub fn new(coords: &[i32]) -> Self {
        Site(SmallVec::from_slice(coords))
    }

    /// One-dimensional site at coordinate `x`.
    pub fn chain(x: i32) -> Self {
        Site(SmallVec::from_slice(&[x]))
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// l1 distance; sites at distance 1 are lattice neighbors.
    pub fn l1_distance(&self, other: &Site) -> u64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).unsigned_abs() as u64)
            .sum()
    }
}

impl std::fmt::Debug for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "{:?}", self.coords())
        }
    }
}

/// A finite box lattice: the product of integer intervals `[lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    lo: Vec<i32>,
    hi: Vec<i32>,
}

impl Lattice {
    /// Box lattice with the given corner coordinates (inclusive).
    pub fn boxed(lo: Vec<i32>, hi: Vec<i32>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidParams(
                "lattice corners must be non-empty and of equal dimension".into(),
            ));
        }
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(Error::InvalidParams(
                "lattice lower corner exceeds upper corner".into(),
            ));
        }
        Ok(Lattice { lo, hi })
    }

    /// One-dimensional chain of `sites` sites at coordinates `0..sites`.
    pub fn chain(sites: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidParams("chain needs at least one site".into()));
        }
        Lattice::boxed(vec![0], vec![sites as i32 - 1])
    }

    /// The symmetric box `[-half_width, half_width]^dim`.
    pub fn symmetric(dim: usize, half_width: i32) -> Result<Self> {
        Lattice::boxed(vec![-half_width; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.lo
            .iter()
            .zip(self.hi.iter())
            .map(|(l, h)| (h - l + 1) as usize)
            .product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, site: &Site) -> bool {
        site.dim() == self.dim()
            && site
                .coords()
                .iter()
                .zip(self.lo.iter().zip(self.hi.iter()))
                .all(|(c, (l, h))| l <= c && c <= h)
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> Vec<Site> {
        let mut out = Vec::with_capacity(self.len());
        let mut cur = self.lo.clone();
        loop {
            out.push(Site::new(&cur));
            let mut k = self.dim();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                if cur[k] < self.hi[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = self.lo[k];
            }
        }
    }

    /// Lexicographic rank of a site, or None if outside the box.
    pub fn index_of(&self, site: &Site) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut idx = 0usize;
        for (k, c) in site.coords().iter().enumerate() {
            let width = (self.hi[k] - self.lo[k] + 1) as usize;
            idx = idx * width + (c - self.lo[k]) as usize;
        }
        Some(idx)
    }

    /// Whether a set of sites is connected under nearest-neighbor adjacency.
    pub fn is_connected(support: &[Site]) -> bool {
        if support.len() <= 1 {
            return true;
        }
        let mut seen = vec![false; support.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for (j, s) in support.iter().enumerate() {
                if !seen[j] && support[i].l1_distance(s) == 1 {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == support.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_sites_ordered() {
        let lat = Lattice::chain(4).unwrap();
        let sites = lat.sites();
        assert_eq!(sites.len(), 4);
        assert_eq!(sites[0], Site::chain(0));
        assert_eq!(sites[3], Site::chain(3));
        assert_eq!(lat.index_of(&Site::chain(2)), Some(2));
        assert_eq!(lat.index_of(&Site::chain(4)), None);
    }

    #[test]
    fn symmetric_box_matches_definition() {
        let lat = Lattice::symmetric(2, 1).unwrap();
        assert_eq!(lat.len(), 9);
        assert!(lat.contains(&Site::new(&[-1, 1])));
        assert!(!lat.contains(&Site::new(&[-2, 0])));
        // lexicographic rank: (-1,-1) is first, (1,1) is last
        assert_eq!(lat.index_of(&Site::new(&[-1, -1])), Some(0));
        assert_eq!(lat.index_of(&Site::new(&[1, 1])), Some(8));
    }

    #[test]
    fn connectivity() {
        let s = |x| Site::chain(x);
        assert!(Lattice::is_connected(&[s(0), s(1), s(2)]));
        assert!(!Lattice::is_connected(&[s(0), s(2)]));
        assert!(Lattice::is_connected(&[s(5)]));
        assert!(Lattice::is_connected(&[]));
    }
}
