use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Lattice coordinates; entries beyond `dim` are zero.
pub type Coord = [usize; MAX_DIM];

/// Periodic hypercubic lattice `(Z / side Z)^dim`.
///
/// Sites are numbered row-major with the first axis fastest, so the site at
/// coordinates `(x_1, .., x_d)` has index `x_1 + side * x_2 + side^2 * x_3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Geometry {
    dim: usize,
    side: usize,
}

impl Geometry {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::Geometry(format!("dimension {dim} outside 1..=3")));
        }
        if side < 4 {
            return Err(Error::Geometry(format!("side {side} is below the minimum of 4")));
        }
        side.checked_pow(dim as u32)
            .ok_or_else(|| Error::Geometry("site count overflows".into()))?;
        Ok(Self { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Number of directed bonds `(x, x + e_mu)`.
    pub fn bonds(&self) -> usize {
        self.sites() * self.dim
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.side.pow(axis as u32)
    }

    pub fn coords(&self, site: usize) -> Coord {
        let mut c = [0; MAX_DIM];
        let mut rest = site;
        for slot in c.iter_mut().take(self.dim) {
            *slot = rest % self.side;
            rest /= self.side;
        }
        c
    }

    pub fn index(&self, coords: &Coord) -> usize {
        let mut idx = 0;
        for axis in (0..self.dim).rev() {
            idx = idx * self.side + coords[axis] % self.side;
        }
        idx
    }

    /// Neighbour of `site` one step along `axis`, forwards or backwards.
    #[inline]
    pub fn neighbor(&self, site: usize, axis: usize, forward: bool) -> usize {
        let stride = self.stride(axis);
        let c = (site / stride) % self.side;
        if forward {
            if c + 1 == self.side {
                site + stride - self.side * stride
            } else {
                site + stride
            }
        } else if c == 0 {
            site + (self.side - 1) * stride
        } else {
            site - stride
        }
    }

    /// Site reached from `site` by the signed displacement `delta`.
    pub fn offset(&self, site: usize, delta: &[isize]) -> usize {
        let mut c = self.coords(site);
        for (axis, slot) in c.iter_mut().enumerate().take(self.dim) {
            let d = delta.get(axis).copied().unwrap_or(0);
            *slot = (*slot as isize + d).rem_euclid(self.side as isize) as usize;
        }
        self.index(&c)
    }

    /// Site `a + b` (coordinate-wise addition modulo side).
    pub fn translate(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        let mut c = [0; MAX_DIM];
        for axis in 0..self.dim {
            c[axis] = (ca[axis] + cb[axis]) % self.side;
        }
        self.index(&c)
    }

    /// Site `a - b`, i.e. the displacement from `b` to `a`.
    pub fn difference(&self, a: usize, b: usize) -> usize {
        let (ca, cb) = (self.coords(a), self.coords(b));
        let mut c = [0; MAX_DIM];
        for axis in 0..self.dim {
            c[axis] = (ca[axis] + self.side - cb[axis]) % self.side;
        }
        self.index(&c)
    }

    /// Minimal-image representative of a coordinate difference, in
    /// `(-side/2, side/2]`.
    #[inline]
    pub fn min_image(&self, delta: f64) -> f64 {
        let s = self.side as f64;
        let mut r = delta.rem_euclid(s);
        if r > s / 2.0 {
            r -= s;
        }
        r
    }

    /// Signed minimal-image displacement of `site` seen from the origin.
    pub fn displacement(&self, site: usize) -> [f64; MAX_DIM] {
        let c = self.coords(site);
        let mut out = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            out[axis] = self.min_image(c[axis] as f64);
        }
        out
    }

    /// Euclidean minimal-image distance between two sites.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (self.coords(a), self.coords(b));
        (0..self.dim)
            .map(|axis| self.min_image(ca[axis] as f64 - cb[axis] as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Geometry with `side / factor` sites per axis.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.side % factor != 0 {
            return Err(Error::Divisibility {
                side: self.side,
                factor,
            });
        }
        Geometry::new(self.dim, self.side / factor)
    }

    /// Lattice momentum `2 pi m / side` of site index `site` read as a
    /// frequency index, with `m` folded into `[-side/2, side/2)`.
    pub fn momentum(&self, site: usize) -> [f64; MAX_DIM] {
        let c = self.coords(site);
        let mut k = [0.0; MAX_DIM];
        for axis in 0..self.dim {
            let m = signed_frequency(c[axis], self.side);
            k[axis] = 2.0 * std::f64::consts::PI * m as f64 / self.side as f64;
        }
        k
    }
}

/// Frequency index folded into `[-n/2, n/2)`.
pub(crate) fn signed_frequency(m: usize, n: usize) -> isize {
    if 2 * m >= n {
        m as isize - n as isize
    } else {
        m as isize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Geometry::new(0, 8).is_err());
        assert!(Geometry::new(4, 8).is_err());
        assert!(Geometry::new(1, 3).is_err());
    }

    #[test]
    fn ring_wraps() {
        let g = Geometry::new(1, 8).unwrap();
        assert_eq!(g.sites(), 8);
        assert_eq!(g.neighbor(7, 0, true), 0);
        assert_eq!(g.neighbor(0, 0, false), 7);
    }

    #[test]
    fn neighbour_counts() {
        for (dim, side, sites) in [(2, 4, 16), (3, 4, 64)] {
            let g = Geometry::new(dim, side).unwrap();
            assert_eq!(g.sites(), sites);
            for site in 0..g.sites() {
                let mut nbrs: Vec<usize> = (0..dim)
                    .flat_map(|a| [g.neighbor(site, a, true), g.neighbor(site, a, false)])
                    .collect();
                nbrs.sort_unstable();
                nbrs.dedup();
                assert_eq!(nbrs.len(), 2 * dim);
                assert!(nbrs.iter().all(|&n| (g.distance(site, n) - 1.0).abs() < 1e-15));
            }
        }
    }

    #[test]
    fn coords_roundtrip_and_translation() {
        let g = Geometry::new(3, 4).unwrap();
        for site in 0..g.sites() {
            assert_eq!(g.index(&g.coords(site)), site);
            let moved = g.translate(site, 21);
            assert_eq!(g.difference(moved, 21), site);
        }
        assert_eq!(g.offset(0, &[-1, 0, 0]), 3);
    }

    #[test]
    fn minimal_image_distance() {
        let g = Geometry::new(1, 8).unwrap();
        assert_eq!(g.distance(0, 3), 3.0);
        assert_eq!(g.distance(0, 5), 3.0);
        assert_eq!(g.distance(1, 7), 2.0);
    }
}
