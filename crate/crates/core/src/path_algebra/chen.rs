use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::path_algebra::grid::GridPath;
use crate::path_algebra::norms::MultFunctional;
use crate::path_algebra::tensor::TwoParamTensor;

/// Largest node count scanned without subsampling.
pub const FULL_TRIPLE_LIMIT: usize = 512;

/// Node indices visited by [`chen_defect`]: every node up to 512 steps,
/// otherwise every `ceil(n/512)`-th node plus the last one.
pub fn triple_indices(n: usize) -> Vec<usize> {
    let stride = if n > FULL_TRIPLE_LIMIT { n.div_ceil(FULL_TRIPLE_LIMIT) } else { 1 };
    let mut idx: Vec<usize> = (0..=n).step_by(stride).collect();
    if *idx.last().unwrap() != n {
        idx.push(n);
    }
    idx
}

/// Explicit two-parameter values on a set of node pairs.
///
/// Unlike [`TwoParamTensor`], every pair value is stored on its own, so the
/// multiplicative property is something to check rather than a given.
#[derive(Debug, Clone)]
pub struct PairTable {
    left: GridPath,
    right: GridPath,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl PairTable {
    fn dm(&self) -> usize {
        self.left.dim() * self.right.dim()
    }

    fn offset(&self, a: usize, b: usize) -> usize {
        (a * self.indices.len() + b) * self.dm()
    }

    /// Values of a Chen-reconstructed tensor, one independent row scan per start node.
    pub fn from_tensor(t: &TwoParamTensor, indices: Vec<usize>) -> Result<Self> {
        check_indices(&indices, t.grid().steps())?;
        let (d, m) = t.dims();
        let len = indices.len();
        let rows: Vec<Vec<f64>> = indices
            .par_iter()
            .enumerate()
            .map(|(a, &i)| {
                let mut row = vec![0.0; len * d * m];
                let mut next = a + 1;
                let last = *indices.last().unwrap();
                t.scan_row(i, last, |j, v| {
                    if next < len && indices[next] == j {
                        row[next * d * m..(next + 1) * d * m].copy_from_slice(v);
                        next += 1;
                    }
                });
                row
            })
            .collect();
        Ok(PairTable {
            left: t.left().clone(),
            right: t.right().clone(),
            indices,
            values: rows.concat(),
        })
    }

    /// Values from a closed form `f(s, t, out)` (e.g. a symbolic integral).
    pub fn from_fn(
        left: &GridPath,
        right: &GridPath,
        indices: Vec<usize>,
        f: impl Fn(f64, f64, &mut [f64]),
    ) -> Result<Self> {
        left.grid().ensure_matches(right.grid(), "pair table")?;
        check_indices(&indices, left.grid().steps())?;
        let dm = left.dim() * right.dim();
        let len = indices.len();
        let mut values = vec![0.0; len * len * dm];
        let g = left.grid();
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate().skip(a + 1) {
                let off = (a * len + b) * dm;
                f(g.time(i), g.time(j), &mut values[off..off + dm]);
            }
        }
        Ok(PairTable { left: left.clone(), right: right.clone(), indices, values })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn get(&self, a: usize, b: usize) -> &[f64] {
        let off = self.offset(a, b);
        &self.values[off..off + self.dm()]
    }

    /// Adds `delta` to entry `(p, q)` of the stored value on the pair of
    /// positions `(a, b)` only; longer pairs are left untouched.
    pub fn perturb(&mut self, a: usize, b: usize, entry: usize, delta: f64) {
        let off = self.offset(a, b);
        self.values[off + entry] += delta;
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    if indices.len() < 3 {
        return Err(Error::invalid("chen defect needs at least three nodes"));
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) || *indices.last().unwrap() > n {
        return Err(Error::invalid("pair-table indices must be increasing and on the grid"));
    }
    Ok(())
}

/// Largest Frobenius residual of
/// `A_{s,u} + A_{u,t} + (x_u − x_s)⊗(y_t − y_u) − A_{s,t}` over stored triples.
pub fn chen_defect_table(table: &PairTable) -> f64 {
    let len = table.indices.len();
    let (d, m) = (table.left.dim(), table.right.dim());
    (0..len)
        .into_par_iter()
        .map(|a| {
            let mut worst = 0.0_f64;
            let xs = table.left.point(table.indices[a]);
            for b in a + 1..len {
                let xu = table.left.point(table.indices[b]);
                let yu = table.right.point(table.indices[b]);
                let su = table.get(a, b);
                for c in b + 1..len {
                    let yt = table.right.point(table.indices[c]);
                    let (ut, st) = (table.get(b, c), table.get(a, c));
                    let mut sq = 0.0;
                    for p in 0..d {
                        for q in 0..m {
                            let k = p * m + q;
                            let r = su[k] + ut[k] + (xu[p] - xs[p]) * (yt[q] - yu[q]) - st[k];
                            sq += r * r;
                        }
                    }
                    worst = worst.max(sq.sqrt());
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Absolute Chen defect of a tensor, on [`triple_indices`].
pub fn chen_defect_tensor(t: &TwoParamTensor) -> f64 {
    let table = PairTable::from_tensor(t, triple_indices(t.grid().steps()))
        .expect("triple indices are valid for the tensor grid");
    chen_defect_table(&table)
}

/// Defect divided by the largest stored magnitude (absolute when that is zero).
pub fn chen_defect_relative(t: &TwoParamTensor) -> f64 {
    let table = PairTable::from_tensor(t, triple_indices(t.grid().steps()))
        .expect("triple indices are valid for the tensor grid");
    let defect = chen_defect_table(&table);
    let scale = table.max_abs();
    if scale > 0.0 {
        defect / scale
    } else {
        defect
    }
}

/// Chen defect of a multiplicative functional.
pub fn chen_defect(mf: &MultFunctional) -> f64 {
    chen_defect_tensor(mf.tensor())
}
