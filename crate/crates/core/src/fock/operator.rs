use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{ModelParams, ProductBasis};
use crate::{Error, Result};

/// Sparse operator on a [`ProductBasis`], stored in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    basis: ProductBasis,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex64>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        basis: ProductBasis,
        mut triplets: Vec<(usize, usize, Complex64)>,
        hermitian: bool,
    ) -> Result<Self> {
        let dim = basis.dim();
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= dim || c >= dim) {
            return Err(Error::Input(format!("entry ({r}, {c}) outside dimension {dim}")));
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            values.push(v);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { basis, row_ptr, cols, values, hermitian })
    }

    /// Diagonal operator with entry `f(n_a, n_b)`.
    pub fn diagonal(basis: ProductBasis, hermitian: bool, f: impl Fn(usize, usize) -> f64) -> Self {
        let dim = basis.dim();
        Self {
            basis,
            row_ptr: (0..=dim).collect(),
            cols: (0..dim).collect(),
            values: basis.iter().map(|(_, a, b)| Complex64::new(f(a, b), 0.0)).collect(),
            hermitian,
        }
    }

    pub fn basis(&self) -> &ProductBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Whether the operator was built as Hermitian.
    pub fn is_declared_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[span.clone()].binary_search(&col) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.cols[p], self.values[p]))
        })
    }

    /// `out = A·x`.
    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(out.len(), self.dim());
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[p] * x[self.cols[p]];
            }
            *o = acc;
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut out);
        out
    }

    /// `⟨x|A|x⟩` without allocating.
    pub fn quadratic_form(&self, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, xr) in x.iter().enumerate() {
            let mut row = Complex64::new(0.0, 0.0);
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.values[p] * x[self.cols[p]];
            }
            acc += xr.conj() * row;
        }
        acc
    }

    /// Largest `|A_ij − conj(A_ji)|` over stored entries.
    pub fn hermitian_defect(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|[A, D]_ij|` for the diagonal operator `D`.
    pub fn commutator_with_diagonal(&self, diag: &OperatorMatrix) -> Result<f64> {
        if self.basis != diag.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(self
            .entries()
            .map(|(r, c, v)| (v * (diag.get(c, c) - diag.get(r, r))).norm())
            .fold(0.0, f64::max))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }
}

/// Couplings of the interaction that would leave the truncation rectangle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BoundaryLeak {
    pub dropped: usize,
    /// Σ|element|² of the dropped `a^k b†^l` elements.
    pub weight: f64,
    pub max_element: f64,
}

#[inline]
fn falling_sqrt(n: usize, k: u32) -> f64 {
    (0..k as usize).map(|i| (n - i) as f64).product::<f64>().sqrt()
}

/// Matrix elements `⟨n_a−k, n_b+l| a^k b†^l |n_a, n_b⟩` for every pair of
/// states with both ends in the rectangle, plus the leak report for the rest.
fn conversion_pairs(params: &ModelParams, basis: &ProductBasis) -> (Vec<(usize, usize, f64)>, BoundaryLeak) {
    let (k, l) = (params.k as usize, params.l as usize);
    let mut pairs = Vec::new();
    let mut leak = BoundaryLeak::default();
    for (src, n_a, n_b) in basis.iter() {
        if n_a < k {
            continue;
        }
        let amp = falling_sqrt(n_a, params.k) * falling_sqrt(n_b + l, params.l);
        match basis.index(n_a - k, n_b + l) {
            Some(dst) => pairs.push((dst, src, amp)),
            None => {
                leak.dropped += 1;
                leak.weight += amp * amp;
                leak.max_element = leak.max_element.max(amp);
            }
        }
    }
    (pairs, leak)
}

/// Ĥ restricted to the basis rectangle together with the dropped-coupling report.
pub fn hamiltonian_with_diagnostics(
    params: &ModelParams,
    basis: &ProductBasis,
) -> Result<(OperatorMatrix, BoundaryLeak)> {
    params.validate()?;
    let (pairs, mut leak) = conversion_pairs(params, basis);
    leak.weight *= params.g * params.g;
    leak.max_element *= params.g;
    let mut trip: Vec<(usize, usize, Complex64)> = basis
        .iter()
        .map(|(i, a, b)| (i, i, Complex64::new(params.eps_a * a as f64 + params.eps_b * b as f64, 0.0)))
        .collect();
    if params.g != 0.0 {
        trip.reserve(2 * pairs.len());
        for (dst, src, amp) in pairs {
            let v = Complex64::new(params.g * amp, 0.0);
            trip.push((dst, src, v));
            trip.push((src, dst, v.conj()));
        }
    }
    Ok((OperatorMatrix::from_triplets(*basis, trip, true)?, leak))
}

/// Ĥ = ε_a n̂_a + ε_b n̂_b + g(â^k b̂†^l + â†^k b̂^l) on the rectangle.
pub fn build_hamiltonian(params: &ModelParams, basis: &ProductBasis) -> Result<OperatorMatrix> {
    hamiltonian_with_diagnostics(params, basis).map(|(h, _)| h)
}

/// Number operators, the quadratures x̂, ŷ of `â†^k b̂^l`, and the charge Q̂.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    pub n_a: OperatorMatrix,
    pub n_b: OperatorMatrix,
    pub x: OperatorMatrix,
    pub y: OperatorMatrix,
    pub q: OperatorMatrix,
}

pub fn build_observables(params: &ModelParams, basis: &ProductBasis) -> Result<ObservableSet> {
    params.validate()?;
    let (pairs, _) = conversion_pairs(params, basis);
    // J = â†^k b̂^l maps dst -> src with the same real amplitude.
    let half = 0.5;
    let mut xt = Vec::with_capacity(2 * pairs.len());
    let mut yt = Vec::with_capacity(2 * pairs.len());
    for &(dst, src, amp) in &pairs {
        let c = amp * half;
        xt.push((src, dst, Complex64::new(c, 0.0)));
        xt.push((dst, src, Complex64::new(c, 0.0)));
        // ŷ = (J − J†)/2i
        yt.push((src, dst, Complex64::new(0.0, -c)));
        yt.push((dst, src, Complex64::new(0.0, c)));
    }
    let (k, l) = (params.k as f64, params.l as f64);
    Ok(ObservableSet {
        n_a: OperatorMatrix::diagonal(*basis, true, |a, _| a as f64),
        n_b: OperatorMatrix::diagonal(*basis, true, |_, b| b as f64),
        x: OperatorMatrix::from_triplets(*basis, xt, true)?,
        y: OperatorMatrix::from_triplets(*basis, yt, true)?,
        q: OperatorMatrix::diagonal(*basis, true, |a, b| l * a as f64 + k * b as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{enumerate_basis, ModeTruncation};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn basis(na: usize, nb: usize) -> ProductBasis {
        enumerate_basis(ModeTruncation::new(na, nb)).unwrap()
    }

    /// Single-mode ladder operator on `n_max + 1` levels.
    fn lowering(n_max: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(n_max + 1, n_max + 1);
        for n in 1..=n_max {
            m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
        }
        m
    }

    fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        a.kronecker(b)
    }

    /// Dense Ĥ from Kronecker products of truncated ladder matrices.
    fn dense_hamiltonian(p: &ModelParams, na: usize, nb: usize) -> DMatrix<Complex64> {
        let a = lowering(na);
        let b = lowering(nb);
        let ia = DMatrix::<Complex64>::identity(na + 1, na + 1);
        let ib = DMatrix::<Complex64>::identity(nb + 1, nb + 1);
        let ak = (0..p.k).fold(ia.clone(), |acc, _| acc * &a);
        let bl = (0..p.l).fold(ib.clone(), |acc, _| acc * &b);
        let num_a = a.adjoint() * &a;
        let num_b = b.adjoint() * &b;
        let conv = kron(&ak, &bl.adjoint());
        let free = kron(&num_a, &ib) * Complex64::new(p.eps_a, 0.0) + kron(&ia, &num_b) * Complex64::new(p.eps_b, 0.0);
        free + (conv.clone() + conv.adjoint()) * Complex64::new(p.g, 0.0)
    }

    #[test]
    fn free_hamiltonian_is_diagonal() {
        let p = ModelParams::new(1, 2, 0.0, 0.7, 1.3).unwrap();
        let b = basis(3, 4);
        let h = build_hamiltonian(&p, &b).unwrap();
        for (r, c, v) in h.entries() {
            if r != c {
                assert_eq!(v.norm(), 0.0);
            }
        }
        let (na, nb) = (2, 3);
        let i = b.index(na, nb).unwrap();
        assert!((h.get(i, i).re - (0.7 * 2.0 + 1.3 * 3.0)).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_elements() {
        let p = ModelParams::resonant(1, 2, 1.0).unwrap();
        let b = basis(1, 2);
        let h = build_hamiltonian(&p, &b).unwrap();
        let v = h.get(b.index(0, 2).unwrap(), b.index(1, 0).unwrap());
        assert!((v.re - 2f64.sqrt()).abs() < 1e-15);

        let p = ModelParams::resonant(2, 2, 0.5).unwrap();
        let b = basis(2, 2);
        let h = build_hamiltonian(&p, &b).unwrap();
        let v = h.get(b.index(0, 2).unwrap(), b.index(2, 0).unwrap());
        assert!((v.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn y_elements_on_small_rectangle() {
        let p = ModelParams::resonant(1, 2, 1.0).unwrap();
        let b = basis(1, 2);
        let obs = build_observables(&p, &b).unwrap();
        // Dense oracle: J = a† ⊗ b², y = (J − J†)/2i.
        let a = lowering(1);
        let bb = lowering(2);
        let j = kron(&a.adjoint(), &(&bb * &bb));
        let y = (j.clone() - j.adjoint()) * Complex64::new(0.0, -0.5);
        let x = (j.clone() + j.adjoint()) * Complex64::new(0.5, 0.0);
        assert!((obs.y.to_dense() - &y).norm() < 1e-15);
        assert!((obs.x.to_dense() - &x).norm() < 1e-15);
        let e = obs.y.get(b.index(0, 2).unwrap(), b.index(1, 0).unwrap());
        assert!((e.norm() - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn charge_eigenvalue() {
        let p = ModelParams::resonant(1, 2, 1.0).unwrap();
        let b = basis(4, 4);
        let obs = build_observables(&p, &b).unwrap();
        let i = b.index(3, 1).unwrap();
        assert_eq!(obs.q.get(i, i).re, 7.0);
    }

    #[test]
    fn leak_reported_when_rectangle_is_too_short_in_b() {
        let p = ModelParams::resonant(1, 2, 1.0).unwrap();
        let b = basis(3, 2);
        let (_, leak) = hamiltonian_with_diagnostics(&p, &b).unwrap();
        assert!(leak.dropped > 0 && leak.weight > 0.0);

        let t = ModeTruncation::for_coherent(4.0, 0, 1, 2);
        let b = enumerate_basis(t).unwrap();
        let (_, leak) = hamiltonian_with_diagnostics(&p, &b).unwrap();
        // Sector-complete for b starting in vacuum: only states with n_b above
        // the reachable range leak.
        assert!(leak.dropped > 0);
    }

    #[test]
    fn interaction_equals_two_g_x() {
        let p = ModelParams::resonant(2, 3, 0.3).unwrap();
        let b = basis(6, 7);
        let h = build_hamiltonian(&p, &b).unwrap().to_dense();
        let x = build_observables(&p, &b).unwrap().x.to_dense();
        assert!((h - x * Complex64::new(0.6, 0.0)).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn sparse_matches_dense_and_is_hermitian(
            k in 1u32..4, l in 1u32..4,
            g in 0.0f64..2.0, ea in -1.0f64..1.0, eb in -1.0f64..1.0,
            na in 0usize..9, nb in 0usize..9,
        ) {
            let p = ModelParams::new(k, l, g, ea, eb).unwrap();
            let b = basis(na, nb);
            prop_assume!(b.dim() <= 100);
            let h = build_hamiltonian(&p, &b).unwrap();
            let dense = dense_hamiltonian(&p, na, nb);
            prop_assert!((h.to_dense() - dense).camax() < 1e-12);
            prop_assert_eq!(h.hermitian_defect(), 0.0);
            let obs = build_observables(&p, &b).unwrap();
            for op in [&obs.n_a, &obs.n_b, &obs.x, &obs.y, &obs.q] {
                prop_assert!(op.is_declared_hermitian());
                prop_assert_eq!(op.hermitian_defect(), 0.0);
            }
            prop_assert_eq!(h.commutator_with_diagonal(&obs.q).unwrap(), 0.0);
        }
    }
}
