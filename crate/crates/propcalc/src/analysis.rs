//! Operator-level analysis: Hermiticity and positivity, partial
//! transpose (matrix and base-independent morph form), the
//! Choi reshuffle, complete-positivity testing, Kraus extraction and
//! sampled cone-positivity.

use crate::linalg::{self, cr, CMat};
use crate::morph::{Direction, Essence, Leg, Morph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("matrix view is {rows}x{cols}, not square")]
    NonSquareView { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("matrix is not positive (min eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("subsystem {index} out of range for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("map is not completely positive (Choi min eigenvalue {0:.3e})")]
    NotCompletelyPositive(f64),
}

/// Positivity in the operator sense: Hermitian within `tol` and minimum
/// eigenvalue at least `-tol`. The minimum eigenvalue of the symmetrized
/// matrix is always returned alongside the verdict.
pub fn is_positive_matrix(m: &CMat, tol: f64) -> Result<(bool, f64), AnalysisError> {
    if m.nrows() != m.ncols() {
        return Err(AnalysisError::NonSquareView { rows: m.nrows(), cols: m.ncols() });
    }
    let defect = linalg::hermiticity_defect(m);
    let min_eig = linalg::min_eigenvalue(m);
    Ok((defect <= tol && min_eig >= -tol, min_eig))
}

/// Positivity of a morph viewed as a matrix with rows over its Out ports
/// and columns over its In ports, both in port order.
pub fn is_positive(m: &Morph, tol: f64) -> Result<(bool, f64), AnalysisError> {
    let rows: Vec<usize> = (0..m.rank())
        .filter(|&p| m.legs()[p].direction == Direction::Out)
        .collect();
    let cols: Vec<usize> = (0..m.rank())
        .filter(|&p| m.legs()[p].direction == Direction::In)
        .collect();
    let view = m
        .to_matrix(&rows, &cols)
        .map_err(|_| AnalysisError::DimMismatch("ports do not partition".into()))?;
    is_positive_matrix(&view, tol)
}

/// A density matrix on a tensor product of subsystems, stored as a morph
/// with legs (Out S0 .. Out Sk-1, In S0 .. In Sk-1).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    morph: Morph,
    dims: Vec<usize>,
}

impl DensityMatrix {
    pub fn from_matrix(m: &CMat, dims: &[usize], tol: f64) -> Result<Self, AnalysisError> {
        let d: usize = dims.iter().product();
        if m.nrows() != d || m.ncols() != d {
            return Err(AnalysisError::NonSquareView { rows: m.nrows(), cols: m.ncols() });
        }
        let defect = linalg::hermiticity_defect(m);
        if defect > tol {
            return Err(AnalysisError::NotHermitian(defect));
        }
        let tr = m.trace();
        if (tr - cr(1.0)).norm() > tol {
            return Err(AnalysisError::BadTrace(tr.re));
        }
        let min_eig = linalg::min_eigenvalue(m);
        if min_eig < -10.0 * tol {
            return Err(AnalysisError::NotPositive(min_eig));
        }
        Ok(Self::from_matrix_unchecked(m, dims))
    }

    /// Build without state validation (used for intermediate operators).
    pub fn from_matrix_unchecked(m: &CMat, dims: &[usize]) -> Self {
        let k = dims.len();
        let mut legs = Vec::with_capacity(2 * k);
        for (i, &d) in dims.iter().enumerate() {
            legs.push(Leg::new(format!("S{i}"), d, Direction::Out, Essence::Physical));
        }
        for (i, &d) in dims.iter().enumerate() {
            legs.push(Leg::new(format!("S{i}"), d, Direction::In, Essence::Physical));
        }
        let rows: Vec<usize> = (0..k).collect();
        let cols: Vec<usize> = (k..2 * k).collect();
        let morph = Morph::from_matrix(m, legs, &rows, &cols).expect("consistent partition");
        DensityMatrix { morph, dims: dims.to_vec() }
    }

    pub fn morph(&self) -> &Morph {
        &self.morph
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> CMat {
        let k = self.dims.len();
        let rows: Vec<usize> = (0..k).collect();
        let cols: Vec<usize> = (k..2 * k).collect();
        self.morph.to_matrix(&rows, &cols).expect("consistent partition")
    }

    fn check_subsystem(&self, s: usize) -> Result<(), AnalysisError> {
        if s >= self.dims.len() {
            Err(AnalysisError::InvalidSubsystem { index: s, count: self.dims.len() })
        } else {
            Ok(())
        }
    }

    /// Base-independent partial transpose: the chosen subsystem's Out/In
    /// leg pair are each replaced by their opposites. Metadata-only; the
    /// data array is untouched.
    pub fn partial_transpose(&self, s: usize) -> Result<Morph, AnalysisError> {
        self.check_subsystem(s)?;
        let k = self.dims.len();
        Ok(self
            .morph
            .opposite(s)
            .and_then(|m| m.opposite(k + s))
            .expect("ports in range"))
    }

    /// Standard-basis matrix of the partial transpose: rows group the
    /// post-transpose Out ports, so the two-subsystem case realizes
    /// `pt[i,j;n,m] = rho[n,j;i,m]` for a transpose on the first factor.
    pub fn partial_transpose_matrix(&self, s: usize) -> Result<CMat, AnalysisError> {
        self.check_subsystem(s)?;
        let k = self.dims.len();
        let pt = self.partial_transpose(s)?;
        let rows: Vec<usize> = (0..k).map(|p| if p == s { k + s } else { p }).collect();
        let cols: Vec<usize> = (k..2 * k).map(|p| if p == k + s { s } else { p }).collect();
        Ok(pt.to_matrix(&rows, &cols).expect("consistent partition"))
    }
}

/// A superoperator on d x d matrices, stored both as a four-leg morph
/// (In a, Out b, Out c, In d) and addressable as the d^2 x d^2 matrix K
/// acting on row-major vectorizations.
#[derive(Debug, Clone)]
pub struct SuperOp {
    morph: Morph,
    dim: usize,
    space: String,
}

impl SuperOp {
    /// From the matrix `K` with `vec(L(A)) = K vec(A)` (row-major vec).
    pub fn from_superop_matrix(k: &CMat, space: impl Into<String>) -> Result<Self, AnalysisError> {
        let n = k.nrows();
        if k.ncols() != n {
            return Err(AnalysisError::NonSquareView { rows: n, cols: k.ncols() });
        }
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n {
            return Err(AnalysisError::DimMismatch(format!("{n} is not a square")));
        }
        let space = space.into();
        let legs = vec![
            Leg::new(space.clone(), d, Direction::In, Essence::Physical),
            Leg::new(space.clone(), d, Direction::Out, Essence::Physical),
            Leg::new(space.clone(), d, Direction::Out, Essence::Physical),
            Leg::new(space.clone(), d, Direction::In, Essence::Physical),
        ];
        let mut data = Vec::with_capacity(n * n);
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for dd in 0..d {
                        data.push(k[(b * d + a, dd * d + c)]);
                    }
                }
            }
        }
        Ok(SuperOp { morph: Morph::new(legs, data).expect("sized"), dim: d, space })
    }

    pub fn superop_matrix(&self) -> CMat {
        let d = self.dim;
        let mut k = CMat::zeros(d * d, d * d);
        let s = [d * d * d, d * d, d, 1usize];
        let data = self.morph.data();
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for dd in 0..d {
                        k[(b * d + a, dd * d + c)] =
                            data[a * s[0] + b * s[1] + c * s[2] + dd * s[3]];
                    }
                }
            }
        }
        k
    }

    pub fn from_kraus(kraus: &[CMat], space: impl Into<String>) -> Result<Self, AnalysisError> {
        let d = kraus.first().map(|m| m.nrows()).unwrap_or(0);
        let mut k = CMat::zeros(d * d, d * d);
        for m in kraus {
            if m.shape() != (d, d) {
                return Err(AnalysisError::DimMismatch("uneven Kraus shapes".into()));
            }
            for r1 in 0..d {
                for r2 in 0..d {
                    for c1 in 0..d {
                        for c2 in 0..d {
                            k[(r1 * d + r2, c1 * d + c2)] += m[(r1, c1)] * m[(r2, c2)].conj();
                        }
                    }
                }
            }
        }
        Self::from_superop_matrix(&k, space)
    }

    pub fn identity(d: usize, space: impl Into<String>) -> Self {
        Self::from_superop_matrix(&linalg::identity(d * d), space).expect("square")
    }

    /// The transpose map A -> A^T.
    pub fn transpose_map(d: usize, space: impl Into<String>) -> Self {
        let mut k = CMat::zeros(d * d, d * d);
        for m in 0..d {
            for n in 0..d {
                k[(m * d + n, n * d + m)] = cr(1.0);
            }
        }
        Self::from_superop_matrix(&k, space).expect("square")
    }

    pub fn unitary(u: &CMat, space: impl Into<String>) -> Self {
        Self::from_kraus(std::slice::from_ref(u), space).expect("square")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn morph(&self) -> &Morph {
        &self.morph
    }

    pub fn space(&self) -> &str {
        &self.space
    }

    pub fn apply_matrix(&self, a: &CMat) -> CMat {
        let v = linalg::mat_to_vec(a);
        linalg::vec_to_mat(&(self.superop_matrix() * v), self.dim, self.dim)
    }

    /// Apply to an operator-shaped morph (legs Out, In on this space) by
    /// composing over the superoperator's (c, d) leg pair.
    pub fn apply(&self, a: &Morph) -> Result<Morph, AnalysisError> {
        if a.rank() != 2
            || a.legs()[0].direction != Direction::Out
            || a.legs()[1].direction != Direction::In
            || a.legs()[0].dim != self.dim
            || a.legs()[1].dim != self.dim
            || a.legs()[0].space != self.space
        {
            return Err(AnalysisError::DimMismatch(format!(
                "expected an operator morph (Out, In) of dim {} on {}",
                self.dim, self.space
            )));
        }
        // L's Out c meets A's In column leg; L's In d meets A's Out row leg.
        let r = self
            .morph
            .compose(a, &[(2, 1), (3, 0)])
            .map_err(|e| AnalysisError::DimMismatch(e.to_string()))?;
        // remaining legs (In a, Out b); reorder to the operator layout.
        Ok(r.permute(&[1, 0]).expect("two legs"))
    }

    /// The Choi matrix: `C[(m,p),(n,q)] = K[(m,n),(p,q)]`, equal to
    /// sum_ij L(E_ij) (x) E_ij in the standard basis.
    pub fn choi_matrix(&self) -> CMat {
        let d = self.dim;
        let k = self.superop_matrix();
        let mut c = CMat::zeros(d * d, d * d);
        for m in 0..d {
            for p in 0..d {
                for n in 0..d {
                    for q in 0..d {
                        c[(m * d + p, n * d + q)] = k[(m * d + n, p * d + q)];
                    }
                }
            }
        }
        c
    }

    /// Inverse of the Choi reshuffle; exact.
    pub fn from_choi_matrix(c: &CMat, space: impl Into<String>) -> Result<Self, AnalysisError> {
        let n = c.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n || c.ncols() != n {
            return Err(AnalysisError::NonSquareView { rows: n, cols: c.ncols() });
        }
        let mut k = CMat::zeros(n, n);
        for m in 0..d {
            for p in 0..d {
                for nn in 0..d {
                    for q in 0..d {
                        k[(m * d + nn, p * d + q)] = c[(m * d + p, nn * d + q)];
                    }
                }
            }
        }
        Self::from_superop_matrix(&k, space)
    }

    /// The Choi operator as a morph on H (x) H*: legs
    /// (Out P, Out V, In P, In V) with data C[(m,p),(n,q)].
    pub fn choi(&self) -> Morph {
        let d = self.dim;
        let legs = vec![
            Leg::new(self.space.clone(), d, Direction::Out, Essence::Physical),
            Leg::new(self.space.clone(), d, Direction::Out, Essence::Virtual),
            Leg::new(self.space.clone(), d, Direction::In, Essence::Physical),
            Leg::new(self.space.clone(), d, Direction::In, Essence::Virtual),
        ];
        Morph::from_matrix(&self.choi_matrix(), legs, &[0, 1], &[2, 3]).expect("sized")
    }

    pub fn tensor(&self, other: &SuperOp, space: impl Into<String>) -> SuperOp {
        let (d1, d2) = (self.dim, other.dim);
        let (k1, k2) = (self.superop_matrix(), other.superop_matrix());
        let d = d1 * d2;
        let mut k = CMat::zeros(d * d, d * d);
        for m1 in 0..d1 {
            for n1 in 0..d1 {
                for p1 in 0..d1 {
                    for q1 in 0..d1 {
                        for m2 in 0..d2 {
                            for n2 in 0..d2 {
                                for p2 in 0..d2 {
                                    for q2 in 0..d2 {
                                        let row = (m1 * d2 + m2) * d + n1 * d2 + n2;
                                        let col = (p1 * d2 + p2) * d + q1 * d2 + q2;
                                        k[(row, col)] = k1[(m1 * d1 + n1, p1 * d1 + q1)]
                                            * k2[(m2 * d2 + n2, p2 * d2 + q2)];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Self::from_superop_matrix(&k, space).expect("square")
    }
}

/// Complete positivity via positivity of the Choi operator.
pub fn is_completely_positive(l: &SuperOp, tol: f64) -> bool {
    let (pos, _) = is_positive_matrix(&l.choi_matrix(), tol).expect("square");
    pos
}

/// Kraus operators from the Choi eigendecomposition: eigenvalues above
/// `tol` keep `M_k[m,p] = sqrt(lambda_k) v_k[(m,p)]`, ordered by
/// descending eigenvalue, each phase-fixed so its largest-magnitude
/// entry is real positive. Values in `(-tol, 0]` are clipped to zero.
pub fn kraus_from_choi(l: &SuperOp, tol: f64) -> Result<Vec<CMat>, AnalysisError> {
    let c = l.choi_matrix();
    let (vals, vecs) = linalg::hermitian_eigen(&c);
    if let Some(&min) = vals.last() {
        if min < -tol {
            return Err(AnalysisError::NotCompletelyPositive(min));
        }
    }
    let d = l.dim;
    let mut kraus = Vec::new();
    for (lam, v) in vals.iter().zip(vecs.iter()) {
        if *lam <= tol {
            continue;
        }
        let mut m = CMat::from_fn(d, d, |r, cc| v[r * d + cc] * cr(lam.sqrt()));
        // phase convention: largest-magnitude entry real positive
        let (mut best, mut mag) = ((0, 0), -1.0);
        for r in 0..d {
            for cc in 0..d {
                if m[(r, cc)].norm() > mag {
                    mag = m[(r, cc)].norm();
                    best = (r, cc);
                }
            }
        }
        if mag > tol {
            let phase = m[best] / cr(mag);
            m *= phase.conj();
        }
        kraus.push(m);
    }
    Ok(kraus)
}

/// Sampled NECESSARY condition for cone-positivity: applies the map to
/// `n_samples` seeded random rank-one projectors and reports false as
/// soon as an output fails positivity. A `true` verdict is evidence,
/// not proof.
pub fn cone_positive_sampled(l: &SuperOp, n_samples: usize, seed: u64, tol: f64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_samples {
        let v = linalg::random_state_vector(l.dim, &mut rng);
        let proj = &v * v.adjoint();
        let out = l.apply_matrix(&proj);
        let (pos, _) = is_positive_matrix(&out, tol).expect("square");
        if !pos {
            return false;
        }
    }
    true
}
