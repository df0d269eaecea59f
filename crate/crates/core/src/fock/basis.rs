use crate::{Error, Result};

/// Highest retained Fock level of each mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeTruncation {
    pub n_a_max: usize,
    pub n_b_max: usize,
}

impl ModeTruncation {
    pub fn new(n_a_max: usize, n_b_max: usize) -> Self {
        Self { n_a_max, n_b_max }
    }

    /// Sizing rule for a coherent pump of mean occupation `n_a` and a Fock
    /// seed `beta`: 6σ coherent tail plus 10 levels for mode a, and every
    /// level of mode b reachable through the conserved charge.
    pub fn for_coherent(n_a: f64, beta: usize, k: u32, l: u32) -> Self {
        let n_a_max = (n_a + 6.0 * n_a.sqrt() + 10.0).ceil() as usize;
        Self::with_charge_room(n_a_max, beta, k, l)
    }

    /// Sizing rule for a Fock pump `|n⟩`. Room is left for the seed to convert
    /// back into mode a.
    pub fn for_fock(n: usize, beta: usize, k: u32, l: u32) -> Self {
        let n_a_max = n + k as usize * (beta / l as usize);
        Self::with_charge_room(n_a_max, beta, k, l)
    }

    fn with_charge_room(n_a_max: usize, beta: usize, k: u32, l: u32) -> Self {
        let n_b_max = beta + (l as f64 / k as f64 * n_a_max as f64).ceil() as usize;
        Self { n_a_max, n_b_max }
    }

    pub fn dimension(&self) -> Result<usize> {
        let sizing = || Error::Sizing { n_a_max: self.n_a_max, n_b_max: self.n_b_max };
        let a = self.n_a_max.checked_add(1).ok_or_else(sizing)?;
        let b = self.n_b_max.checked_add(1).ok_or_else(sizing)?;
        let dim = a.checked_mul(b).ok_or_else(sizing)?;
        // Amplitude storage must itself be addressable.
        if dim > isize::MAX as usize / 16 {
            return Err(sizing());
        }
        Ok(dim)
    }

    /// Scales both cutoffs by `factor`, always growing by at least one level.
    pub fn enlarged(&self, factor: f64) -> Self {
        let grow = |n: usize| ((n as f64 * factor).ceil() as usize).max(n + 1);
        Self { n_a_max: grow(self.n_a_max), n_b_max: grow(self.n_b_max) }
    }
}

/// Row-major enumeration of the truncation rectangle with `n_b` varying
/// fastest: `index(n_a, n_b) = n_a·(n_b_max+1) + n_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ProductBasis {
    truncation: ModeTruncation,
    dim: usize,
}

pub fn enumerate_basis(trunc: ModeTruncation) -> Result<ProductBasis> {
    ProductBasis::new(trunc)
}

impl ProductBasis {
    pub fn new(truncation: ModeTruncation) -> Result<Self> {
        let dim = truncation.dimension()?;
        Ok(Self { truncation, dim })
    }

    pub fn truncation(&self) -> ModeTruncation {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_a_max(&self) -> usize {
        self.truncation.n_a_max
    }

    pub fn n_b_max(&self) -> usize {
        self.truncation.n_b_max
    }

    /// Flat index of `(n_a, n_b)`, or `None` outside the rectangle.
    #[inline]
    pub fn index(&self, n_a: usize, n_b: usize) -> Option<usize> {
        (n_a <= self.truncation.n_a_max && n_b <= self.truncation.n_b_max)
            .then(|| n_a * (self.truncation.n_b_max + 1) + n_b)
    }

    #[inline]
    pub fn levels(&self, index: usize) -> Option<(usize, usize)> {
        let stride = self.truncation.n_b_max + 1;
        (index < self.dim).then(|| (index / stride, index % stride))
    }

    /// All `(index, n_a, n_b)` triples in index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let stride = self.truncation.n_b_max + 1;
        (0..self.dim).map(move |i| (i, i / stride, i % stride))
    }
}
