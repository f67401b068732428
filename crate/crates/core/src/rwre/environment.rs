use crate::energy::{apply_divergence_form, check_outflow};
use crate::error::{param, Error, Result};
use crate::lattice::{compensated_sum, ensure_same, BondField, BondRole, EnergyField, Geometry};

/// Compressed sparse column matrix with sorted row indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    n: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

impl CscMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            col_ptr: (0..=n).collect(),
            rows: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    /// Builds from per-column `(row, value)` lists; rows are sorted and
    /// exact zeros dropped.
    pub fn from_columns(n: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_unstable_by_key(|e| e.0);
            for (r, v) in col {
                if v != 0.0 {
                    rows.push(r);
                    vals.push(v);
                }
            }
            col_ptr.push(rows.len());
        }
        Self { n, col_ptr, rows, vals }
    }

    /// Dense column-major input.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        let cols = (0..n)
            .map(|y| (0..n).map(|x| (x, dense[y * n + x])).collect())
            .collect();
        Self::from_columns(n, cols)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn column(&self, y: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[y]..self.col_ptr[y + 1];
        self.rows[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        let r = self.col_ptr[y]..self.col_ptr[y + 1];
        match self.rows[r.clone()].binary_search(&x) {
            Ok(i) => self.vals[r.start + i],
            Err(_) => 0.0,
        }
    }

    /// `out = M v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (y, vy) in v.iter().enumerate() {
            if *vy == 0.0 {
                continue;
            }
            for (x, m) in self.column(y) {
                out[x] += m * vy;
            }
        }
        out
    }

    /// `self ∘ rhs`, i.e. apply `rhs` first.
    pub fn compose(&self, rhs: &CscMatrix) -> CscMatrix {
        let n = self.n;
        let mut acc = vec![0.0; n];
        let mut touched = vec![false; n];
        let mut active: Vec<usize> = Vec::new();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for y in 0..n {
            for (k, b) in rhs.column(y) {
                for (x, a) in self.column(k) {
                    if !touched[x] {
                        touched[x] = true;
                        active.push(x);
                    }
                    acc[x] += a * b;
                }
            }
            active.sort_unstable();
            for &x in &active {
                if acc[x] != 0.0 {
                    rows.push(x);
                    vals.push(acc[x]);
                }
                acc[x] = 0.0;
                touched[x] = false;
            }
            active.clear();
            col_ptr.push(rows.len());
        }
        CscMatrix { n, col_ptr, rows, vals }
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n).map(|y| compensated_sum(self.column(y).map(|e| e.1))).collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n * self.n];
        for y in 0..self.n {
            for (x, v) in self.column(y) {
                d[y * self.n + x] = v;
            }
        }
        d
    }

    pub fn min(&self) -> f64 {
        self.vals.iter().copied().fold(0.0, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Bond(BondField),
    Sparse(CscMatrix),
}

/// Column-stochastic kernel `p_xy` on one lattice, tagged with a time.
///
/// One-step kernels are stored by their bond conductances; composed or
/// renormalised kernels are sparse matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentKernel {
    geometry: Geometry,
    t: u64,
    repr: Repr,
}

/// One-step kernel of the conductances `c`:
/// `p_{x,x±e_μ}` is the conductance of the bond joining the two sites and
/// `p_xx = 1 − Σ_μ (c(x,μ) + c(x−e_μ,μ))`.
pub fn transition_matrix(c: &BondField) -> Result<EnvironmentKernel> {
    EnvironmentKernel::from_conductances(c.clone(), 0)
}

impl EnvironmentKernel {
    pub fn from_conductances(c: BondField, t: u64) -> Result<Self> {
        if c.role() != BondRole::Conductance {
            return Err(param("c", "transition kernels are built from conductances"));
        }
        check_outflow(&c)?;
        Ok(Self {
            geometry: c.geometry(),
            t,
            repr: Repr::Bond(c),
        })
    }

    /// Homogeneous lazy walk with conductance `kappa0` everywhere.
    pub fn homogeneous(g: Geometry, kappa0: f64, t: u64) -> Result<Self> {
        Self::from_conductances(BondField::constant(g, BondRole::Conductance, kappa0)?, t)
    }

    pub fn from_sparse(g: Geometry, m: CscMatrix, t: u64) -> Result<Self> {
        if m.dim() != g.sites() {
            return Err(Error::GeometryMismatch(format!(
                "{}x{} matrix on {} sites",
                m.dim(),
                m.dim(),
                g.sites()
            )));
        }
        Ok(Self { geometry: g, t, repr: Repr::Sparse(m) })
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn with_time(mut self, t: u64) -> Self {
        self.t = t;
        self
    }

    pub fn conductances(&self) -> Option<&BondField> {
        match &self.repr {
            Repr::Bond(c) => Some(c),
            Repr::Sparse(_) => None,
        }
    }

    pub fn is_bond_supported(&self) -> bool {
        matches!(self.repr, Repr::Bond(_))
    }

    /// `(p v)(x) = Σ_y p_xy v(y)`.
    pub fn apply_values(&self, v: &[f64]) -> Vec<f64> {
        match &self.repr {
            Repr::Bond(c) => apply_divergence_form(v, c),
            Repr::Sparse(m) => m.apply(v),
        }
    }

    pub fn apply(&self, e: &EnergyField) -> Result<EnergyField> {
        ensure_same(self.geometry, e.geometry())?;
        let next = self.apply_values(e.values());
        if let Some((site, v)) = next.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeEnergy { site, value: *v });
        }
        Ok(EnergyField::from_raw(self.geometry, next))
    }

    pub fn to_sparse(&self) -> CscMatrix {
        match &self.repr {
            Repr::Sparse(m) => m.clone(),
            Repr::Bond(c) => {
                let g = self.geometry;
                let cols = (0..g.sites())
                    .map(|y| {
                        let mut col = Vec::with_capacity(2 * g.dim() + 1);
                        let mut out = 0.0;
                        for mu in 0..g.dim() {
                            let fwd = g.neighbor(y, mu, true);
                            let bwd = g.neighbor(y, mu, false);
                            col.push((fwd, c.get(y, mu)));
                            col.push((bwd, c.get(bwd, mu)));
                            out += c.get(y, mu) + c.get(bwd, mu);
                        }
                        col.push((y, 1.0 - out));
                        merge_duplicates(col)
                    })
                    .collect();
                CscMatrix::from_columns(g.sites(), cols)
            }
        }
    }

    pub fn entry(&self, x: usize, y: usize) -> f64 {
        match &self.repr {
            Repr::Sparse(m) => m.entry(x, y),
            Repr::Bond(_) => self.to_sparse().entry(x, y),
        }
    }

    /// `self ∘ earlier`: the kernel of applying `earlier` then `self`.
    pub fn compose(&self, earlier: &EnvironmentKernel) -> Result<EnvironmentKernel> {
        ensure_same(self.geometry, earlier.geometry)?;
        let m = self.to_sparse().compose(&earlier.to_sparse());
        Ok(Self {
            geometry: self.geometry,
            t: earlier.t,
            repr: Repr::Sparse(m),
        })
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.to_sparse().column_sums()
    }
}

fn merge_duplicates(mut col: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    col.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(col.len());
    for (r, v) in col {
        match out.last_mut() {
            Some(last) if last.0 == r => last.1 += v,
            _ => out.push((r, v)),
        }
    }
    out
}
