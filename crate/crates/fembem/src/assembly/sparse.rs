//! Minimal coordinate-format sparse matrices (sorted, duplicates merged).

use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;
use std::ops::{AddAssign, Mul};

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Coo<T> {
    pub nrows: usize,
    pub ncols: usize,
    /// Row-major sorted, unique (row, col) pairs.
    pub entries: Vec<(usize, usize, T)>,
}

impl<T: Copy + AddAssign + Default> Coo<T> {
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, T)>) -> Self {
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut entries: Vec<(usize, usize, T)> = Vec::with_capacity(t.len());
        for (i, j, v) in t {
            match entries.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => entries.push((i, j, v)),
            }
        }
        Coo { nrows, ncols, entries }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Coo { nrows, ncols, entries: vec![] }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.entries.iter().map(|&(i, j, v)| (j, i, v)).collect())
    }
}

impl Coo<f64> {
    pub fn to_complex(&self) -> Coo<C> {
        Coo {
            nrows: self.nrows,
            ncols: self.ncols,
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, C::new(v, 0.0))).collect(),
        }
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    /// x^T A x for a complex vector, returned as x^H A x (A real symmetric).
    pub fn quad_form(&self, x: &[C]) -> f64 {
        self.entries.iter().map(|&(i, j, v)| (x[i].conj() * x[j]).re * v).sum()
    }
}

impl Coo<C> {
    pub fn to_dense(&self) -> Mat<C> {
        let mut m = Mat::<C>::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect())
    }

    pub fn to_faer(&self) -> SparseColMat<usize, C> {
        let t: Vec<Triplet<usize, usize, C>> = self.entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &t).expect("valid sparse structure")
    }
}

/// sum_k c_k A_k for real matrices of equal shape.
pub fn combine(parts: &[(C, &Coo<f64>)]) -> Coo<C> {
    let (nr, nc) = (parts[0].1.nrows, parts[0].1.ncols);
    let mut t = Vec::with_capacity(parts.iter().map(|p| p.1.nnz()).sum());
    for (c, a) in parts {
        assert_eq!((a.nrows, a.ncols), (nr, nc));
        t.extend(a.entries.iter().map(|&(i, j, v)| (i, j, *c * v)));
    }
    Coo::from_triplets(nr, nc, t)
}

pub fn matvec<T, X>(a: &Coo<T>, x: &[X]) -> Vec<X>
where
    T: Copy,
    X: Copy + Default + AddAssign + Mul<T, Output = X>,
{
    let mut y = vec![X::default(); a.nrows];
    for &(i, j, v) in &a.entries {
        y[i] += x[j] * v;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicates() {
        let a = Coo::from_triplets(2, 2, vec![(1, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0)]);
        assert_eq!(a.entries, vec![(0, 1, 2.0), (1, 0, 4.0)]);
        let y = matvec(&a, &[1.0, 1.0]);
        assert_eq!(y, vec![2.0, 4.0]);
        let c = combine(&[(C::new(0.0, 1.0), &a), (C::new(1.0, 0.0), &a)]);
        assert_eq!(c.entries[1].2, C::new(4.0, 4.0));
    }
}
