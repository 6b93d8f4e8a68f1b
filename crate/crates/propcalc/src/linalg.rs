//! Small dense linear-algebra helpers shared by the analysis and CTC
//! modules. Everything here works on `nalgebra` dynamic matrices over
//! `Complex64`; sizes stay at desk scale (dimension products well below
//! a few hundred).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Hermitian eigendecomposition, eigenvalues sorted descending.
///
/// The input is symmetrized as `(M + M†)/2` before solving, so callers
/// should check Hermiticity themselves if that matters.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, Vec<CVec>) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (vals, vecs)
}

pub fn eigenvalues_sorted(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigenvalues_sorted(m).last().copied().unwrap_or(0.0)
}

pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs_entry(&(m - m.adjoint()))
}

pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    max_abs_entry(&(a - b))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Row-major vectorization: `vec(A)[i*n + j] = A[i][j]`.
pub fn mat_to_vec(m: &CMat) -> CVec {
    let (r, n) = m.shape();
    CVec::from_fn(r * n, |k, _| m[(k / n, k % n)])
}

pub fn vec_to_mat(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols);
    CMat::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Partial trace of an operator on `H_1 (x) H_2` with dims `(d1, d2)`,
/// keeping the subsystem selected by `keep` (0 or 1).
pub fn partial_trace_matrix(m: &CMat, d1: usize, d2: usize, keep: usize) -> CMat {
    assert_eq!(m.nrows(), d1 * d2);
    assert_eq!(m.ncols(), d1 * d2);
    match keep {
        0 => CMat::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
        }),
        1 => CMat::from_fn(d2, d2, |i, j| {
            (0..d1).map(|k| m[(k * d2 + i, k * d2 + j)]).sum()
        }),
        _ => panic!("keep must be 0 or 1"),
    }
}

/// Numerical rank via Gaussian elimination with partial pivoting.
pub fn rank_with_tol(m: &CMat, tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let (pivot, pmag) = (rank..rows)
            .map(|r| (r, a[(r, col)].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pmag <= tol {
            continue;
        }
        a.swap_rows(rank, pivot);
        let pv = a[(rank, col)];
        for r in (rank + 1)..rows {
            let f = a[(r, col)] / pv;
            for cc in col..cols {
                let sub = f * a[(rank, cc)];
                a[(r, cc)] -= sub;
            }
        }
        rank += 1;
    }
    rank
}

pub fn random_complex_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_gaussian(rng))
}

fn random_gaussian<R: Rng>(rng: &mut R) -> C64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    c(r * (2.0 * std::f64::consts::PI * u2).cos(), r * (2.0 * std::f64::consts::PI * u2).sin())
}

/// Haar-random unitary from QR-style orthonormalization of a complex
/// Gaussian matrix, with each column's phase fixed so its first entry of
/// largest magnitude is real positive.
pub fn haar_random_unitary<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = random_complex_matrix(d, d, rng);
    let mut cols: Vec<CVec> = (0..d).map(|j| g.column(j).into_owned()).collect();
    for j in 0..d {
        for k in 0..j {
            let proj = cols[k].dotc(&cols[j]);
            let sub = cols[k].scale(1.0) * proj;
            cols[j] -= sub;
        }
        let norm = cols[j].norm();
        cols[j] /= cr(norm);
        // phase fix: first entry with non-negligible magnitude made real positive
        let lead = (0..d).find(|&i| cols[j][i].norm() > 1e-12).unwrap();
        let phase = cols[j][lead] / cr(cols[j][lead].norm());
        let corr = phase.conj();
        cols[j] *= corr;
    }
    CMat::from_columns(&cols)
}

pub fn random_state_vector<R: Rng>(d: usize, rng: &mut R) -> CVec {
    let mut v = CVec::from_fn(d, |_, _| random_gaussian(rng));
    let n = v.norm();
    v /= cr(n);
    v
}

pub fn random_density_matrix<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = random_complex_matrix(d, d, rng);
    let m = &g * g.adjoint();
    let tr: C64 = m.trace();
    m.scale(1.0) / tr
}

pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = random_complex_matrix(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

// --- fixed 2x2 / 4x4 gate matrices -----------------------------------

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
}

pub fn pauli_y() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
}

/// The Bell-labelled Pauli family: sigma_00 = I, sigma_01 = X,
/// sigma_10 = Z, sigma_11 = Z*X.
pub fn sigma_xy(x: u8, y: u8) -> CMat {
    match (x, y) {
        (0, 0) => identity(2),
        (0, 1) => pauli_x(),
        (1, 0) => pauli_z(),
        (1, 1) => pauli_z() * pauli_x(),
        _ => panic!("bell labels must be 0 or 1"),
    }
}

pub fn hadamard() -> CMat {
    let s = 1.0 / 2.0_f64.sqrt();
    CMat::from_row_slice(2, 2, &[cr(s), cr(s), cr(s), cr(-s)])
}

pub fn cnot() -> CMat {
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = cr(1.0);
    m[(1, 1)] = cr(1.0);
    m[(2, 3)] = cr(1.0);
    m[(3, 2)] = cr(1.0);
    m
}

pub fn swap() -> CMat {
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = cr(1.0);
    m[(1, 2)] = cr(1.0);
    m[(2, 1)] = cr(1.0);
    m[(3, 3)] = cr(1.0);
    m
}

/// Control on qubit 2, `V` applied to qubit 1 when the control is set.
pub fn controlled_on_second(v: &CMat) -> CMat {
    assert_eq!(v.shape(), (2, 2));
    let mut m = CMat::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            // basis ordering |q1 q2>: control is the low bit
            m[(i * 2, j * 2)] = if i == j { cr(1.0) } else { cr(0.0) };
            m[(i * 2 + 1, j * 2 + 1)] = v[(i, j)];
        }
    }
    m
}

/// Bell state |Psi_xy> = (I (x) sigma_xy) |Psi_00> as a 4-vector,
/// |Psi_00> = (|00> + |11>)/sqrt(2).
pub fn bell_vector(x: u8, y: u8) -> CVec {
    let s = 1.0 / 2.0_f64.sqrt();
    let phi = CVec::from_fn(4, |k, _| if k == 0 || k == 3 { cr(s) } else { cr(0.0) });
    let u = kron(&identity(2), &sigma_xy(x, y));
    u * phi
}

fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
