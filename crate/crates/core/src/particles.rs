//! Particle storage: an n-by-d array of positions, one particle per row.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A set of `n` particles in `d` dimensions, stored row-major.
///
/// The rows are the implicit distribution the solvers transport; `n` and `d`
/// are fixed for the life of the set.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet<T> {
    data: Vec<T>,
    n: usize,
    d: usize,
}

impl<T: Real> ParticleSet<T> {
    pub fn new(n: usize, d: usize, data: Vec<T>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Contract(format!(
                "particle set needs n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        if data.len() != n * d {
            return Err(Error::Contract(format!(
                "expected {} entries for {n}x{d}, got {}",
                n * d,
                data.len()
            )));
        }
        Ok(Self { data, n, d })
    }

    pub fn zeros(n: usize, d: usize) -> Result<Self> {
        Self::new(n, d, vec![T::zero(); n * d])
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Contract("no rows".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Contract("ragged rows".into()));
        }
        let mut data = Vec::with_capacity(n * d);
        for r in rows {
            data.extend_from_slice(r);
        }
        Self::new(n, d, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.d)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Per-row mean of some flat n-by-d array (helper for diagnostics).
    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.d];
        for r in self.rows() {
            for (acc, v) in m.iter_mut().zip(r) {
                *acc += *v;
            }
        }
        let inv = T::one() / T::of_usize(self.n);
        for v in &mut m {
            *v *= inv;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_contracts() {
        assert!(ParticleSet::<f64>::new(0, 2, vec![]).is_err());
        assert!(ParticleSet::<f64>::new(2, 2, vec![0.0; 3]).is_err());
        let p = ParticleSet::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.row(1), &[3.0, 4.0]);
        assert_eq!(p.n(), 2);
        assert_eq!(p.d(), 2);
    }

    #[test]
    fn finiteness_detected() {
        let p = ParticleSet::new(1, 2, vec![1.0, f64::NAN]).unwrap();
        assert!(!p.all_finite());
    }

    #[test]
    fn mean_of_rows() {
        let p = ParticleSet::from_rows(&[vec![0.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(p.mean(), vec![1.0, 3.0]);
    }
}
