//! The thickening functor to density-matrix level channels and the
//! closed-timelike-curve machinery: Deutsch fixed points, post-selected
//! time-travel Kraus operators, universal channels and the qubit
//! idempotent classification.

use crate::analysis::SuperOp;
use crate::linalg::{self, cr, CMat, CVec};
use crate::morph::{Direction, Essence, Morph, MorphError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ThickCtcError {
    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("Kraus set violates the {mode:?} normalization (defect {defect:.3e})")]
    KrausInvariant { mode: TraceMode, defect: f64 },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("fixed-point iteration did not converge in {iters} steps (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("legs at ports {0} and {1} do not form an operator-space pair")]
    NotThickLeg(usize, usize),
    #[error(transparent)]
    Morph(#[from] MorphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMode {
    TracePreserving,
    TraceNonIncreasing,
}

/// A completely positive map given by Kraus operators.
#[derive(Debug, Clone)]
pub struct Channel {
    kraus: Vec<CMat>,
    trace_mode: TraceMode,
}

impl Channel {
    pub fn new(kraus: Vec<CMat>, trace_mode: TraceMode, tol: f64) -> Result<Self, ThickCtcError> {
        let d_in = kraus.first().map(|m| m.ncols()).unwrap_or(0);
        let d_out = kraus.first().map(|m| m.nrows()).unwrap_or(0);
        let mut s = CMat::zeros(d_in, d_in);
        for m in &kraus {
            if m.ncols() != d_in || m.nrows() != d_out {
                return Err(ThickCtcError::DimMismatch("uneven Kraus shapes".into()));
            }
            s += m.adjoint() * m;
        }
        let defect = match trace_mode {
            TraceMode::TracePreserving => linalg::max_abs_diff(&s, &linalg::identity(d_in)),
            TraceMode::TraceNonIncreasing => {
                (-linalg::min_eigenvalue(&(linalg::identity(d_in) - &s))).max(0.0)
            }
        };
        if defect > tol {
            return Err(ThickCtcError::KrausInvariant { mode: trace_mode, defect });
        }
        Ok(Channel { kraus, trace_mode })
    }

    pub fn identity(d: usize) -> Self {
        Channel { kraus: vec![linalg::identity(d)], trace_mode: TraceMode::TracePreserving }
    }

    pub fn unitary(u: &CMat, tol: f64) -> Result<Self, ThickCtcError> {
        let defect = linalg::max_abs_diff(&(u * u.adjoint()), &linalg::identity(u.nrows()));
        if u.nrows() != u.ncols() || defect > tol {
            return Err(ThickCtcError::NotUnitary(defect));
        }
        Ok(Channel { kraus: vec![u.clone()], trace_mode: TraceMode::TracePreserving })
    }

    /// The channel X -> Tr(X) rho0 for a density matrix rho0.
    pub fn point_collapse(rho0: &CMat, tol: f64) -> Result<Self, ThickCtcError> {
        let d = rho0.nrows();
        let (vals, vecs) = linalg::hermitian_eigen(rho0);
        let mut kraus = Vec::new();
        for (lam, v) in vals.iter().zip(vecs.iter()) {
            if *lam <= tol {
                continue;
            }
            for j in 0..d {
                let mut m = CMat::zeros(d, d);
                for i in 0..d {
                    m[(i, j)] = v[i] * cr(lam.sqrt());
                }
                kraus.push(m);
            }
        }
        Channel::new(kraus, TraceMode::TracePreserving, 1e-8)
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn trace_mode(&self) -> TraceMode {
        self.trace_mode
    }

    pub fn dim_in(&self) -> usize {
        self.kraus.first().map(|m| m.ncols()).unwrap_or(0)
    }

    pub fn dim_out(&self) -> usize {
        self.kraus.first().map(|m| m.nrows()).unwrap_or(0)
    }

    pub fn apply(&self, rho: &CMat) -> CMat {
        let mut out = CMat::zeros(self.dim_out(), self.dim_out());
        for m in &self.kraus {
            out += m * rho * m.adjoint();
        }
        out
    }

    /// Composition self after other.
    pub fn compose(&self, other: &Channel) -> Result<Channel, ThickCtcError> {
        if self.dim_in() != other.dim_out() {
            return Err(ThickCtcError::DimMismatch("channel chain".into()));
        }
        let kraus: Vec<CMat> = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| a * b))
            .collect();
        let mode = if self.trace_mode == TraceMode::TracePreserving
            && other.trace_mode == TraceMode::TracePreserving
        {
            TraceMode::TracePreserving
        } else {
            TraceMode::TraceNonIncreasing
        };
        Ok(Channel { kraus, trace_mode: mode })
    }

    pub fn superop(&self) -> SuperOp {
        SuperOp::from_kraus(&self.kraus, "H").expect("validated shapes")
    }

    /// If this channel sends every X to Tr(X) rho0, return rho0.
    pub fn point_collapse_target(&self, tol: f64) -> Option<CMat> {
        let d = self.dim_in();
        if self.dim_out() != d {
            return None;
        }
        let rho0 = {
            let mut e = CMat::zeros(d, d);
            e[(0, 0)] = cr(1.0);
            self.apply(&e)
        };
        for i in 0..d {
            for j in 0..d {
                let mut e = CMat::zeros(d, d);
                e[(i, j)] = cr(1.0);
                let out = self.apply(&e);
                let expect = if i == j { rho0.clone() } else { CMat::zeros(d, d) };
                if linalg::max_abs_diff(&out, &expect) > tol {
                    return None;
                }
            }
        }
        Some(rho0)
    }
}

/// The thickening functor on morphs: A -> A (x) bar(A). Pure states map
/// to their projectors, operators to their conjugation channel, closed
/// scalar diagrams to the squared modulus of their value.
pub fn thicken_morph(a: &Morph) -> Morph {
    a.tensor(&a.bar())
}

/// A density matrix as a thick state morph with legs (Out Physical,
/// Out Virtual), matching `thicken_morph` of a pure state.
pub fn thick_state(rho: &CMat, space: impl Into<String>) -> Morph {
    let space = space.into();
    let legs = vec![
        crate::morph::Leg::new(space.clone(), rho.nrows(), Direction::Out, Essence::Physical),
        crate::morph::Leg::new(space, rho.ncols(), Direction::Out, Essence::Virtual),
    ];
    let mut data = Vec::with_capacity(rho.nrows() * rho.ncols());
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            data.push(rho[(i, j)]);
        }
    }
    Morph::new(legs, data).expect("sized")
}

/// Apply a thickened operator (legs Out P, In P, Out V, In V) to a thick
/// state (legs Out P, Out V): the result is A rho A-dagger.
pub fn thick_apply(thick: &Morph, state: &Morph) -> Result<Morph, ThickCtcError> {
    Ok(thick.compose(state, &[(1, 0), (3, 1)])?)
}

/// The four canonical operator-space flavors related by linear
/// isometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpFlavor {
    /// B(H): legs (Out Physical, Out Virtual).
    BH,
    /// B(H*): legs (Out Virtual, Out Physical).
    BHStar,
    /// B(H)*: legs (In Virtual, In Physical).
    BHDual,
    /// B(H*)*: legs (In Physical, In Virtual).
    BHStarDual,
}

impl OpFlavor {
    /// Position in the square of isometries: (transposed, dualized)
    /// relative to B(H).
    fn coords(self) -> (bool, bool) {
        match self {
            OpFlavor::BH => (false, false),
            OpFlavor::BHStar => (true, false),
            OpFlavor::BHDual => (false, true),
            OpFlavor::BHStarDual => (true, true),
        }
    }
}

fn detect_flavor(m: &Morph, port: usize) -> Result<OpFlavor, ThickCtcError> {
    let err = || ThickCtcError::NotThickLeg(port, port + 1);
    if port + 1 >= m.rank() {
        return Err(err());
    }
    let (a, b) = (&m.legs()[port], &m.legs()[port + 1]);
    if a.space != b.space || a.dim != b.dim || a.direction != b.direction {
        return Err(err());
    }
    match (a.direction, a.essence, b.essence) {
        (Direction::Out, Essence::Physical, Essence::Virtual) => Ok(OpFlavor::BH),
        (Direction::Out, Essence::Virtual, Essence::Physical) => Ok(OpFlavor::BHStar),
        (Direction::In, Essence::Virtual, Essence::Physical) => Ok(OpFlavor::BHDual),
        (Direction::In, Essence::Physical, Essence::Virtual) => Ok(OpFlavor::BHStarDual),
        _ => Err(err()),
    }
}

/// Insert the canonical isometry that carries the operator-space leg
/// pair starting at `port` into the target flavor. The transpose edge
/// permutes the pair; the dual edge applies the metadata-only opposite
/// to both legs; closed thick-diagram values are unchanged.
pub fn iso_operator_spaces(
    m: &Morph,
    port: usize,
    target: OpFlavor,
) -> Result<Morph, ThickCtcError> {
    let current = detect_flavor(m, port)?;
    let (t1, d1) = current.coords();
    let (t2, d2) = target.coords();
    let mut out = m.clone();
    if t1 != t2 {
        let mut order: Vec<usize> = (0..m.rank()).collect();
        order.swap(port, port + 1);
        out = out.permute(&order)?;
    }
    if d1 != d2 {
        out = out.opposite(port)?.opposite(port + 1)?;
    }
    Ok(out)
}

fn check_unitary(u: &CMat, tol: f64) -> Result<(), ThickCtcError> {
    if u.nrows() != u.ncols() {
        return Err(ThickCtcError::NotUnitary(f64::INFINITY));
    }
    let defect = linalg::max_abs_diff(&(u * u.adjoint()), &linalg::identity(u.nrows()));
    if defect > tol {
        return Err(ThickCtcError::NotUnitary(defect));
    }
    Ok(())
}

/// Matrix of a linear map on d x d operators in the row-major
/// vectorization basis.
fn superop_matrix_of<F: Fn(&CMat) -> CMat>(d: usize, f: F) -> CMat {
    let mut k = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(i, j)] = cr(1.0);
            let out = linalg::mat_to_vec(&f(&e));
            for r in 0..d * d {
                k[(r, i * d + j)] = out[r];
            }
        }
    }
    k
}

/// Averaged (damped) iteration `x <- (x + F(x))/2` of a
/// trace-preserving-on-states linear map, started from the maximally
/// mixed state. The damping maps every peripheral eigenvalue other than
/// 1 strictly inside the unit disk, so the iteration converges
/// geometrically to the same limit the Cesaro means select: the
/// spectral projection of I/d onto the fixed space.
fn averaged_fixed_point<F: Fn(&CMat) -> CMat>(
    f: F,
    d: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(CMat, f64), ThickCtcError> {
    let mut x = linalg::identity(d).scale(1.0 / d as f64);
    let mut residual = f64::INFINITY;
    for _ in 0..=max_iter {
        let fx = f(&x);
        residual = linalg::frobenius_norm(&(&fx - &x));
        if residual <= tol {
            return Ok((x, residual));
        }
        x = (x + fx).scale(0.5);
    }
    Err(ThickCtcError::NoConvergence { iters: max_iter, residual })
}

fn fixed_space_multiplicity<F: Fn(&CMat) -> CMat>(d: usize, f: F) -> usize {
    let k = superop_matrix_of(d, f) - linalg::identity(d * d);
    d * d - linalg::rank_with_tol(&k, 1e-8)
}

/// One round of the Deutsch circuit: U acts on (in-system, ctc-system);
/// the output subsystem selected by `loop_port` feeds back into the
/// time machine.
fn deutsch_round(u: &CMat, rho_in: &CMat, x: &CMat, d_in: usize, d_ctc: usize, keep: usize) -> CMat {
    let joint = u * linalg::kron(rho_in, x) * u.adjoint();
    linalg::partial_trace_matrix(&joint, d_in, d_ctc, keep)
}

/// Deutsch fixed point: rho_ctc with
/// `rho_ctc = Tr_loop(U (rho_in (x) rho_ctc) U-dagger)`, obtained by the
/// averaged iteration from the maximally mixed state. The returned
/// multiplicity is the dimension of the eigenvalue-1 space of the
/// induced linear map, since fixed points need not be unique.
pub fn deutsch_fixed_point(
    u: &CMat,
    rho_in: &CMat,
    d_in: usize,
    d_ctc: usize,
    loop_port: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(CMat, usize), ThickCtcError> {
    check_unitary(u, 1e-9)?;
    if u.nrows() != d_in * d_ctc || rho_in.nrows() != d_in || loop_port > 1 {
        return Err(ThickCtcError::DimMismatch("Deutsch circuit shapes".into()));
    }
    let kept_dim = if loop_port == 0 { d_in } else { d_ctc };
    if kept_dim != d_ctc {
        return Err(ThickCtcError::DimMismatch(
            "looped output subsystem must match the ctc dimension".into(),
        ));
    }
    let f = |x: &CMat| deutsch_round(u, rho_in, x, d_in, d_ctc, loop_port);
    let (rho_ctc, _) = averaged_fixed_point(f, d_ctc, tol, max_iter)?;
    let mult = fixed_space_multiplicity(d_ctc, f);
    Ok((rho_ctc, mult))
}

/// What the round trip does to the traveler: the non-looped output
/// subsystem of `U (rho_in (x) rho_ctc) U-dagger`.
pub fn deutsch_out(
    u: &CMat,
    rho_in: &CMat,
    rho_ctc: &CMat,
    d_in: usize,
    d_ctc: usize,
    loop_port: usize,
) -> Result<CMat, ThickCtcError> {
    check_unitary(u, 1e-9)?;
    if u.nrows() != d_in * d_ctc || rho_in.nrows() != d_in || rho_ctc.nrows() != d_ctc {
        return Err(ThickCtcError::DimMismatch("Deutsch circuit shapes".into()));
    }
    Ok(deutsch_round(u, rho_in, rho_ctc, d_in, d_ctc, 1 - loop_port))
}

/// A thick time-travel circuit: direct channel S on the joint
/// (in, ctc) system, time-machine channel T on the ctc system.
#[derive(Debug, Clone)]
pub struct CtcProblem {
    pub direct: Channel,
    pub machine: Channel,
    pub rho_in: CMat,
    pub d_in: usize,
    pub d_ctc: usize,
    pub loop_port: usize,
}

#[derive(Debug, Clone)]
pub struct ThickSolution {
    pub rho_ctc: CMat,
    pub rho_ctc_prime: CMat,
    pub rho_out: CMat,
    pub residual: f64,
    pub multiplicity: usize,
}

/// Solve the thick fixed point `rho = Tr_loop(S(rho_in (x) T(rho)))`.
/// When T collapses every state to a point the answer is computed in a
/// single step; otherwise the averaged iteration is used.
pub fn thick_ctc_solve(p: &CtcProblem, tol: f64, max_iter: usize) -> Result<ThickSolution, ThickCtcError> {
    let (d_in, d_ctc) = (p.d_in, p.d_ctc);
    if p.direct.dim_in() != d_in * d_ctc
        || p.direct.dim_out() != d_in * d_ctc
        || p.machine.dim_in() != d_ctc
        || p.rho_in.nrows() != d_in
        || p.loop_port > 1
    {
        return Err(ThickCtcError::DimMismatch("thick circuit shapes".into()));
    }
    let kept_dim = if p.loop_port == 0 { d_in } else { d_ctc };
    if kept_dim != d_ctc {
        return Err(ThickCtcError::DimMismatch(
            "looped output subsystem must match the ctc dimension".into(),
        ));
    }
    let round = |prime: &CMat| p.direct.apply(&linalg::kron(&p.rho_in, prime));
    let trace_to = |joint: &CMat, keep: usize| {
        linalg::partial_trace_matrix(joint, d_in, d_ctc, keep)
    };
    if let Some(rho0) = p.machine.point_collapse_target(1e-10) {
        let joint = round(&rho0);
        return Ok(ThickSolution {
            rho_ctc: trace_to(&joint, p.loop_port),
            rho_ctc_prime: rho0,
            rho_out: trace_to(&joint, 1 - p.loop_port),
            residual: 0.0,
            multiplicity: 1,
        });
    }
    let f = |x: &CMat| trace_to(&round(&p.machine.apply(x)), p.loop_port);
    let (rho_ctc, residual) = averaged_fixed_point(f, d_ctc, tol, max_iter)?;
    let rho_ctc_prime = p.machine.apply(&rho_ctc);
    let joint = round(&rho_ctc_prime);
    Ok(ThickSolution {
        rho_out: trace_to(&joint, 1 - p.loop_port),
        rho_ctc,
        rho_ctc_prime,
        residual,
        multiplicity: fixed_space_multiplicity(d_ctc, f),
    })
}

/// The universal time-machine channel T(rho) = I/d. For qubits this is
/// the Pauli mixture with coefficient 1/4 per operator (the
/// trace-preserving normalization); other dimensions use the
/// point-collapse construction.
pub fn depolarize_to_max_mixed(d: usize) -> Channel {
    if d == 2 {
        let kraus = vec![
            linalg::identity(2).scale(0.5),
            linalg::pauli_x().scale(0.5),
            linalg::pauli_y().scale(0.5),
            linalg::pauli_z().scale(0.5),
        ];
        Channel::new(kraus, TraceMode::TracePreserving, 1e-12).expect("exact")
    } else {
        Channel::point_collapse(&linalg::identity(d).scale(1.0 / d as f64), 1e-12)
            .expect("valid state")
    }
}

/// Kraus operator of the post-selected time-travel channel for Bell
/// outcome (x, y): `A_xy = (1/2) Tr_2((I (x) conj(sigma_xy)) U)`,
/// the branch amplitude of feeding half a Bell pair through U and
/// post-selecting the Bell effect Psi_xy on the other side. The
/// normalization makes the four outcomes a complete Kraus set
/// (sum of A-dagger A = I); for U = SWAP each operator is a multiple
/// of a Pauli, conj(sigma_xy)/2.
pub fn post_selected_kraus(u: &CMat, x: u8, y: u8) -> Result<CMat, ThickCtcError> {
    check_unitary(u, 1e-9)?;
    if u.nrows() != 4 {
        return Err(ThickCtcError::DimMismatch("expected a two-qubit unitary".into()));
    }
    let sigma_conj = linalg::sigma_xy(x, y).conjugate();
    let mut a = CMat::zeros(2, 2);
    for r in 0..2 {
        for cc in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    a[(r, cc)] += sigma_conj[(k, l)] * u[(r * 2 + l, cc * 2 + k)] * cr(0.5);
                }
            }
        }
    }
    Ok(a)
}

/// Probability of the post-selected outcome with Kraus operator `a` on
/// the normalized input `phi`.
pub fn post_selection_probability(a: &CMat, phi: &CVec) -> f64 {
    (a * phi).norm().powi(2)
}

/// The three completely positive idempotent types on a qubit.
#[derive(Debug, Clone)]
pub enum Idempotent {
    Identity,
    PointCollapse(CMat),
    ProjectiveMeasurement(CMat, CMat),
    Unclassified,
}

#[derive(Debug, Clone)]
pub struct ClassifyResult {
    pub kind: Idempotent,
    pub idempotent: CMat,
    pub idempotent_defect: f64,
    pub powers_used: usize,
}

fn apply_superop(k: &CMat, a: &CMat) -> CMat {
    let d = a.nrows();
    linalg::vec_to_mat(&(k * linalg::mat_to_vec(a)), d, d)
}

fn classify_idempotent(k: &CMat, tol: f64) -> Idempotent {
    let d = 2usize;
    if linalg::max_abs_diff(k, &linalg::identity(d * d)) <= tol {
        return Idempotent::Identity;
    }
    // point collapse: K(E_ij) = delta_ij rho0
    let unit = |i: usize, j: usize| {
        let mut e = CMat::zeros(d, d);
        e[(i, j)] = cr(1.0);
        e
    };
    let rho0 = apply_superop(k, &unit(0, 0));
    let collapse = (0..d).all(|i| {
        (0..d).all(|j| {
            let expect = if i == j { rho0.clone() } else { CMat::zeros(d, d) };
            linalg::max_abs_diff(&apply_superop(k, &unit(i, j)), &expect) <= tol
        })
    });
    if collapse {
        return Idempotent::PointCollapse(rho0);
    }
    // projective measurement: find a Hermitian fixed operator that is
    // not a multiple of the identity, then verify K = sum_i P_i . P_i
    let n = (k - linalg::identity(d * d)).adjoint() * (k - linalg::identity(d * d));
    let (vals, vecs) = linalg::hermitian_eigen(&n);
    let mut best: Option<CMat> = None;
    let mut best_norm = tol;
    for (lam, v) in vals.iter().zip(vecs.iter()) {
        if *lam > tol {
            continue;
        }
        let m = linalg::vec_to_mat(v, d, d);
        for cand in [&m + m.adjoint(), (&m - m.adjoint()).scale(1.0) * crate::linalg::c(0.0, 1.0)]
        {
            let traceless = &cand - linalg::identity(d).scale(cand.trace().re / d as f64);
            let norm = linalg::frobenius_norm(&traceless);
            if norm > best_norm {
                best_norm = norm;
                best = Some(traceless);
            }
        }
    }
    if let Some(h) = best {
        let (_, hv) = linalg::hermitian_eigen(&h);
        let p1 = &hv[0] * hv[0].adjoint();
        let p2 = &hv[1] * hv[1].adjoint();
        let ok = (0..d).all(|i| {
            (0..d).all(|j| {
                let e = unit(i, j);
                let expect = &p1 * &e * &p1 + &p2 * &e * &p2;
                linalg::max_abs_diff(&apply_superop(k, &e), &expect) <= tol
            })
        });
        if ok {
            return Idempotent::ProjectiveMeasurement(p1, p2);
        }
    }
    Idempotent::Unclassified
}

/// Find the idempotent limit of Cesaro-averaged powers of a qubit
/// channel and classify it among the three completely positive
/// idempotent types.
pub fn power_limit_classify(t: &Channel, tol: f64, max_power: usize) -> ClassifyResult {
    assert_eq!(t.dim_in(), 2, "classifier is defined for qubit channels");
    let k0 = superop_matrix_of(2, |a| t.apply(a));
    let mut power = k0.clone();
    let mut sum = k0.clone();
    for n in 1..=max_power {
        let avg = sum.scale(1.0 / n as f64);
        let defect = linalg::frobenius_norm(&(&avg * &avg - &avg));
        if defect <= tol {
            let kind = classify_idempotent(&avg, (tol * 100.0).max(1e-8));
            return ClassifyResult { kind, idempotent: avg, idempotent_defect: defect, powers_used: n };
        }
        power = &power * &k0;
        sum += &power;
    }
    let avg = sum.scale(1.0 / (max_power as f64 + 1.0));
    let defect = linalg::frobenius_norm(&(&avg * &avg - &avg));
    ClassifyResult {
        kind: Idempotent::Unclassified,
        idempotent: avg,
        idempotent_defect: defect,
        powers_used: max_power,
    }
}

/// Hermitian basis of d x d operators made of density matrices, so that
/// convex combinations stay physical.
pub fn density_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::new();
    for i in 0..d {
        let mut e = CMat::zeros(d, d);
        e[(i, i)] = cr(1.0);
        basis.push(e);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let mut plus = CMat::zeros(d, d);
            plus[(i, i)] = cr(0.5);
            plus[(j, j)] = cr(0.5);
            plus[(i, j)] = cr(0.5);
            plus[(j, i)] = cr(0.5);
            basis.push(plus);
            let mut ip = CMat::zeros(d, d);
            ip[(i, i)] = cr(0.5);
            ip[(j, j)] = cr(0.5);
            ip[(i, j)] = crate::linalg::c(0.0, -0.5);
            ip[(j, i)] = crate::linalg::c(0.0, 0.5);
            basis.push(ip);
        }
    }
    basis
}

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub fixed_point_ok: bool,
    pub max_residual: f64,
    pub multiplicity_one: bool,
    pub linearity_defect: f64,
    pub linear_ok: bool,
    pub choi_min_eig: f64,
    pub cp_ok: bool,
}

#[derive(Debug, Clone)]
pub struct UniversalReport {
    pub entries: Vec<SuiteEntry>,
    pub point_collapse_machine: bool,
    pub passed: bool,
}

/// Evidence that a time-machine channel T is universal: for every direct
/// channel S in the suite the fixed point must be found (and be unique
/// unless T is a verified point collapse), the induced map
/// rho_in -> rho_out must be linear on a density-matrix basis and on
/// random convex mixtures, and that map must be completely positive.
/// Unless T is a point collapse (a sufficient condition) the report is
/// evidence, not proof.
pub fn is_universal_evidence(
    machine: &Channel,
    suite: &[Channel],
    d_in: usize,
    d_ctc: usize,
    loop_port: usize,
    tol: f64,
    seed: u64,
) -> Result<UniversalReport, ThickCtcError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let basis = density_basis(d_in);
    let n = basis.len();
    let point_collapse_machine = machine.point_collapse_target(1e-10).is_some();
    let mut entries = Vec::with_capacity(suite.len());
    for s in suite {
        let solve = |rho: &CMat| {
            let p = CtcProblem {
                direct: s.clone(),
                machine: machine.clone(),
                rho_in: rho.clone(),
                d_in,
                d_ctc,
                loop_port,
            };
            thick_ctc_solve(&p, tol.min(1e-10), 10_000)
        };
        let mut fixed_ok = true;
        let mut max_residual: f64 = 0.0;
        let mut mult_one = true;
        let mut outs = Vec::with_capacity(n);
        for b in &basis {
            match solve(b) {
                Ok(sol) => {
                    max_residual = max_residual.max(sol.residual);
                    if sol.multiplicity != 1 {
                        mult_one = false;
                    }
                    outs.push(sol.rho_out);
                }
                Err(_) => {
                    fixed_ok = false;
                    outs.push(CMat::zeros(d_in, d_in));
                }
            }
        }
        // linearity on random convex mixtures of the basis states
        let mut linearity_defect: f64 = 0.0;
        if fixed_ok {
            for _ in 0..8 {
                let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
                let total: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= total);
                let mut mix = CMat::zeros(d_in, d_in);
                let mut predicted = CMat::zeros(d_in, d_in);
                for (wi, (b, o)) in w.iter().zip(basis.iter().zip(outs.iter())) {
                    mix += b.scale(*wi);
                    predicted += o.scale(*wi);
                }
                match solve(&mix) {
                    Ok(sol) => {
                        linearity_defect = linearity_defect
                            .max(linalg::max_abs_diff(&sol.rho_out, &predicted));
                    }
                    Err(_) => fixed_ok = false,
                }
            }
        }
        let linear_ok = fixed_ok && linearity_defect <= tol;
        // complete positivity of the induced map, reconstructed from the
        // basis outputs
        let mut choi_min_eig = f64::NEG_INFINITY;
        let mut cp_ok = false;
        if fixed_ok {
            let mut mb = CMat::zeros(d_in * d_in, n);
            let mut mo = CMat::zeros(d_in * d_in, n);
            for (j, (b, o)) in basis.iter().zip(outs.iter()).enumerate() {
                let (vb, vo) = (linalg::mat_to_vec(b), linalg::mat_to_vec(o));
                for r in 0..d_in * d_in {
                    mb[(r, j)] = vb[r];
                    mo[(r, j)] = vo[r];
                }
            }
            if let Some(inv) = mb.clone().try_inverse() {
                let k = mo * inv;
                let induced = SuperOp::from_superop_matrix(&k, "H").expect("square");
                choi_min_eig = linalg::min_eigenvalue(&induced.choi_matrix());
                cp_ok = choi_min_eig >= -1e-8;
            }
        }
        entries.push(SuiteEntry {
            fixed_point_ok: fixed_ok,
            max_residual,
            multiplicity_one: mult_one || point_collapse_machine,
            linearity_defect,
            linear_ok,
            choi_min_eig,
            cp_ok,
        });
    }
    let passed = entries
        .iter()
        .all(|e| e.fixed_point_ok && e.multiplicity_one && e.linear_ok && e.cp_ok);
    Ok(UniversalReport { entries, point_collapse_machine, passed })
}

/// The thickening of a two-qubit unitary as a direct channel on the
/// joint (in, ctc) system.
pub fn thicken_unitary_channel(u: &CMat) -> Result<Channel, ThickCtcError> {
    Channel::unitary(u, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morph::Leg;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(23)
    }

    fn proj(i: usize) -> CMat {
        let mut p = CMat::zeros(2, 2);
        p[(i, i)] = cr(1.0);
        p
    }

    #[test]
    fn thicken_pure_state_gives_projector() {
        let v = CVec::from_vec(vec![cr(1.0), cr(0.0)]);
        let ket = Morph::from_state(&v, "Q");
        let thick = thicken_morph(&ket);
        assert_eq!(thick.legs()[0].essence, Essence::Physical);
        assert_eq!(thick.legs()[1].essence, Essence::Virtual);
        let m = thick.to_matrix(&[0], &[1]).unwrap();
        assert!(linalg::max_abs_diff(&m, &proj(0)) < 1e-15);
    }

    #[test]
    fn thicken_unitary_conjugates() {
        let sx = Morph::from_operator(&linalg::pauli_x(), "Q");
        let thick = thicken_morph(&sx);
        let rho = thick_state(&proj(0), "Q");
        let out = thick_apply(&thick, &rho).unwrap();
        let m = out.to_matrix(&[0], &[1]).unwrap();
        assert!(linalg::max_abs_diff(&m, &proj(1)) < 1e-15);
    }

    #[test]
    fn thicken_closed_diagram_squares_modulus() {
        let mut r = rng();
        for _ in 0..20 {
            let legs = vec![
                Leg::new("A", 2, Direction::Out, Essence::Physical),
                Leg::new("B", 3, Direction::Out, Essence::Physical),
            ];
            let state = Morph::random(legs, &mut r);
            let op = Morph::from_operator(&linalg::random_complex_matrix(3, 3, &mut r), "B");
            let effect = Morph::random(
                vec![
                    Leg::new("A", 2, Direction::In, Essence::Physical),
                    Leg::new("B", 3, Direction::In, Essence::Physical),
                ],
                &mut r,
            );
            let z = state
                .compose(&op, &[(1, 1)])
                .unwrap()
                .compose(&effect, &[(0, 0), (1, 1)])
                .unwrap()
                .as_scalar()
                .unwrap();
            let (ts, to, te) = (thicken_morph(&state), thicken_morph(&op), thicken_morph(&effect));
            // thick state legs: A P, B P, A V, B V; thick op: Out P, In P, Out V, In V
            let so = ts.compose(&to, &[(1, 1), (3, 3)]).unwrap();
            // so legs: A P, A V, op Out P, op Out V
            let zz = so
                .compose(&te, &[(0, 0), (1, 2), (2, 1), (3, 3)])
                .unwrap()
                .as_scalar()
                .unwrap();
            assert!((zz - cr(z.norm_sqr())).norm() < 1e-12, "{zz} vs {}", z.norm_sqr());
        }
    }

    #[test]
    fn thicken_is_functorial() {
        let mut r = rng();
        for _ in 0..10 {
            let a = Morph::from_operator(&linalg::random_complex_matrix(3, 3, &mut r), "Q");
            let b = Morph::from_operator(&linalg::random_complex_matrix(3, 3, &mut r), "Q");
            let ab = a.compose(&b, &[(1, 0)]).unwrap();
            let lhs = thicken_morph(&ab);
            let rhs = thicken_morph(&a).compose(&thicken_morph(&b), &[(1, 0), (3, 2)]).unwrap();
            // lhs legs: Out P, In P, Out V, In V; rhs legs: Out P, Out V, In P, In V
            let lm = lhs.to_matrix(&[0, 2], &[1, 3]).unwrap();
            let rm = rhs.to_matrix(&[0, 1], &[2, 3]).unwrap();
            assert!(linalg::max_abs_diff(&lm, &rm) < 1e-12);
        }
    }

    #[test]
    fn operator_space_isometries_round_trip() {
        let mut r = rng();
        let x = thick_state(&linalg::random_complex_matrix(2, 2, &mut r), "Q");
        let cycle = [OpFlavor::BHStar, OpFlavor::BHStarDual, OpFlavor::BHDual, OpFlavor::BH];
        let mut m = x.clone();
        for f in cycle {
            m = iso_operator_spaces(&m, 0, f).unwrap();
        }
        assert_eq!(m, x);
    }

    #[test]
    fn operator_space_functional_pairing() {
        // |i><j| maps to the functional A -> <j|A|i>; evaluating on
        // E_ij = |j><i| gives 1
        for i in 0..2usize {
            for j in 0..2usize {
                let mut x = CMat::zeros(2, 2);
                x[(i, j)] = cr(1.0);
                let f = iso_operator_spaces(&thick_state(&x, "Q"), 0, OpFlavor::BHDual).unwrap();
                let mut e = CMat::zeros(2, 2);
                e[(j, i)] = cr(1.0);
                let a = thick_state(&e, "Q");
                // f legs (In V, In P); a legs (Out P, Out V)
                let val = f.compose(&a, &[(0, 1), (1, 0)]).unwrap().as_scalar().unwrap();
                assert!((val - cr(1.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn operator_space_change_preserves_closed_value() {
        let mut r = rng();
        for _ in 0..10 {
            let x = linalg::random_complex_matrix(2, 2, &mut r);
            let y = linalg::random_complex_matrix(2, 2, &mut r);
            let xs = thick_state(&x, "Q");
            let f = iso_operator_spaces(&thick_state(&y, "Q"), 0, OpFlavor::BHDual).unwrap();
            let direct = f.compose(&xs, &[(0, 1), (1, 0)]).unwrap().as_scalar().unwrap();
            // move the wire to the B(H*) pairing on both ends
            let xs2 = iso_operator_spaces(&xs, 0, OpFlavor::BHStar).unwrap();
            let f2 = iso_operator_spaces(&f, 0, OpFlavor::BHStarDual).unwrap();
            let moved = f2.compose(&xs2, &[(0, 1), (1, 0)]).unwrap().as_scalar().unwrap();
            assert!((direct - moved).norm() < 1e-12);
            // and the value is the trace pairing
            let tr = (y * x).trace();
            assert!((direct - tr).norm() < 1e-12);
        }
    }

    #[test]
    fn deutsch_swap_is_transparent() {
        let mut r = rng();
        let rho = linalg::random_density_matrix(2, &mut r);
        let (rho_ctc, mult) =
            deutsch_fixed_point(&linalg::swap(), &rho, 2, 2, 0, 1e-10, 10_000).unwrap();
        assert!(linalg::max_abs_diff(&rho_ctc, &linalg::identity(2).scale(0.5)) < 1e-10);
        assert_eq!(mult, 4);
        let out = deutsch_out(&linalg::swap(), &rho, &rho_ctc, 2, 2, 0).unwrap();
        assert!(linalg::max_abs_diff(&out, &rho) < 1e-10);
    }

    #[test]
    fn deutsch_identity_is_transparent() {
        let mut r = rng();
        let rho = linalg::random_density_matrix(2, &mut r);
        let (rho_ctc, mult) =
            deutsch_fixed_point(&linalg::identity(4), &rho, 2, 2, 1, 1e-10, 10_000).unwrap();
        assert!(linalg::max_abs_diff(&rho_ctc, &linalg::identity(2).scale(0.5)) < 1e-10);
        assert_eq!(mult, 4);
        let out = deutsch_out(&linalg::identity(4), &rho, &rho_ctc, 2, 2, 1).unwrap();
        assert!(linalg::max_abs_diff(&out, &rho) < 1e-10);
    }

    #[test]
    fn deutsch_control_v() {
        let mut r = rng();
        let v = linalg::haar_random_unitary(2, &mut r);
        let u = linalg::controlled_on_second(&v);
        let rho = linalg::random_density_matrix(2, &mut r);
        let (rho_ctc, mult) = deutsch_fixed_point(&u, &rho, 2, 2, 1, 1e-10, 10_000).unwrap();
        assert!(linalg::max_abs_diff(&rho_ctc, &linalg::identity(2).scale(0.5)) < 1e-9);
        assert!(mult >= 2, "diagonal fixed space expected, got multiplicity {mult}");
        let out = deutsch_out(&u, &rho, &rho_ctc, 2, 2, 1).unwrap();
        let expect = (&rho + &v * &rho * v.adjoint()).scale(0.5);
        assert!(linalg::max_abs_diff(&out, &expect) < 1e-9);
    }

    #[test]
    fn deutsch_rejects_non_unitary() {
        let mut r = rng();
        let m = linalg::random_complex_matrix(4, 4, &mut r);
        let rho = linalg::random_density_matrix(2, &mut r);
        assert!(matches!(
            deutsch_fixed_point(&m, &rho, 2, 2, 0, 1e-10, 100),
            Err(ThickCtcError::NotUnitary(_))
        ));
    }

    #[test]
    fn deutsch_cnot_is_nonlinear() {
        // control on the in-system, target on the ctc system, with the
        // crossed wiring that loops the first output subsystem back
        let u = linalg::cnot();
        let run = |rho: &CMat| {
            let (rho_ctc, _) = deutsch_fixed_point(&u, rho, 2, 2, 0, 1e-10, 10_000).unwrap();
            deutsch_out(&u, rho, &rho_ctc, 2, 2, 0).unwrap()
        };
        let out0 = run(&proj(0));
        let out1 = run(&proj(1));
        let mixed = run(&linalg::identity(2).scale(0.5));
        assert!(linalg::max_abs_diff(&out0, &proj(0)) < 1e-9);
        assert!(linalg::max_abs_diff(&out1, &proj(0)) < 1e-9);
        let avg = (&out0 + &out1).scale(0.5);
        assert!(linalg::max_abs_diff(&mixed, &avg) > 0.4, "Deutsch map should be nonlinear");
    }

    #[test]
    fn thick_solve_point_collapse_machine() {
        let mut r = rng();
        let u = linalg::haar_random_unitary(4, &mut r);
        let rho = linalg::random_density_matrix(2, &mut r);
        let p = CtcProblem {
            direct: Channel::unitary(&u, 1e-9).unwrap(),
            machine: depolarize_to_max_mixed(2),
            rho_in: rho.clone(),
            d_in: 2,
            d_ctc: 2,
            loop_port: 1,
        };
        let sol = thick_ctc_solve(&p, 1e-10, 10_000).unwrap();
        let joint = &u * linalg::kron(&rho, &linalg::identity(2).scale(0.5)) * u.adjoint();
        let expect = linalg::partial_trace_matrix(&joint, 2, 2, 0);
        assert!(linalg::max_abs_diff(&sol.rho_out, &expect) < 1e-12);
        assert!(
            linalg::max_abs_diff(&sol.rho_ctc_prime, &linalg::identity(2).scale(0.5)) < 1e-12
        );
    }

    #[test]
    fn thick_solve_identity_machine_reduces_to_deutsch() {
        let mut r = rng();
        let u = linalg::haar_random_unitary(4, &mut r);
        let rho = linalg::random_density_matrix(2, &mut r);
        let p = CtcProblem {
            direct: Channel::unitary(&u, 1e-9).unwrap(),
            machine: Channel::identity(2),
            rho_in: rho.clone(),
            d_in: 2,
            d_ctc: 2,
            loop_port: 1,
        };
        let sol = thick_ctc_solve(&p, 1e-10, 10_000).unwrap();
        let (rho_ctc, _) = deutsch_fixed_point(&u, &rho, 2, 2, 1, 1e-10, 10_000).unwrap();
        assert!(linalg::max_abs_diff(&sol.rho_ctc, &rho_ctc) < 1e-8);
        let out = deutsch_out(&u, &rho, &rho_ctc, 2, 2, 1).unwrap();
        assert!(linalg::max_abs_diff(&sol.rho_out, &out) < 1e-8);
    }

    #[test]
    fn thick_solve_swap_with_collapse() {
        let mut r = rng();
        let rho0 = linalg::random_density_matrix(2, &mut r);
        let rho = linalg::random_density_matrix(2, &mut r);
        let p = CtcProblem {
            direct: Channel::unitary(&linalg::swap(), 1e-9).unwrap(),
            machine: Channel::point_collapse(&rho0, 1e-12).unwrap(),
            rho_in: rho.clone(),
            d_in: 2,
            d_ctc: 2,
            loop_port: 0,
        };
        let sol = thick_ctc_solve(&p, 1e-10, 10_000).unwrap();
        assert!(linalg::max_abs_diff(&sol.rho_out, &rho) < 1e-12);
        assert!(linalg::max_abs_diff(&sol.rho_ctc, &rho0) < 1e-12);
    }

    #[test]
    fn depolarizing_channel_properties() {
        for d in [2usize, 3] {
            let t = depolarize_to_max_mixed(d);
            let mut r = rng();
            for _ in 0..5 {
                let rho = linalg::random_density_matrix(d, &mut r);
                let out = t.apply(&rho);
                assert!(
                    linalg::max_abs_diff(&out, &linalg::identity(d).scale(1.0 / d as f64))
                        < 1e-12
                );
            }
            // idempotent as a superoperator
            let k = superop_matrix_of(d, |a| t.apply(a));
            assert!(linalg::max_abs_diff(&(&k * &k), &k) < 1e-12);
            assert!(t.point_collapse_target(1e-10).is_some());
        }
    }

    #[test]
    fn post_selected_kraus_identity_and_completeness() {
        let mut r = rng();
        // the partial-trace oracle below cross-checks every U
        for trial in 0..5 {
            let u = if trial == 0 { linalg::identity(4) } else { linalg::haar_random_unitary(4, &mut r) };
            let mut total = CMat::zeros(2, 2);
            let mut prob_sum = 0.0;
            let phi = linalg::random_state_vector(2, &mut r);
            for x in 0..2u8 {
                for y in 0..2u8 {
                    let a = post_selected_kraus(&u, x, y).unwrap();
                    // oracle: matrix partial trace of (I (x) conj(sigma)) U
                    let prod =
                        linalg::kron(&linalg::identity(2), &linalg::sigma_xy(x, y).conjugate())
                            * &u;
                    let oracle = linalg::partial_trace_matrix(&prod, 2, 2, 0).scale(0.5);
                    assert!(linalg::max_abs_diff(&a, &oracle) < 1e-12);
                    total += a.adjoint() * &a;
                    prob_sum += post_selection_probability(&a, &phi);
                }
            }
            assert!(linalg::max_abs_diff(&total, &linalg::identity(2)) < 1e-10);
            assert!((prob_sum - 1.0).abs() < 1e-10);
        }
        // U = I special case: only the (0,0) outcome survives
        let a00 = post_selected_kraus(&linalg::identity(4), 0, 0).unwrap();
        assert!(linalg::max_abs_diff(&a00, &linalg::identity(2)) < 1e-12);
        // U = SWAP: Bell-effect channels proportional to the Paulis
        for x in 0..2u8 {
            for y in 0..2u8 {
                let a = post_selected_kraus(&linalg::swap(), x, y).unwrap();
                let expect = CMat::from_fn(2, 2, |i, j| linalg::sigma_xy(x, y)[(i, j)].conj())
                    .scale(0.5);
                assert!(linalg::max_abs_diff(&a, &expect) < 1e-12);
            }
        }
        for (x, y) in [(0u8, 1u8), (1, 0), (1, 1)] {
            let a = post_selected_kraus(&linalg::identity(4), x, y).unwrap();
            assert!(linalg::frobenius_norm(&a) < 1e-12);
        }
    }

    #[test]
    fn classify_depolarizing_as_point_collapse() {
        let res = power_limit_classify(&depolarize_to_max_mixed(2), 1e-10, 200);
        assert!(res.idempotent_defect <= 1e-9);
        match res.kind {
            Idempotent::PointCollapse(rho0) => {
                assert!(
                    linalg::max_abs_diff(&rho0, &linalg::identity(2).scale(0.5)) < 1e-9
                );
            }
            other => panic!("expected point collapse, got {other:?}"),
        }
    }

    #[test]
    fn classify_dephasing_as_projective_measurement() {
        let t = Channel::new(
            vec![proj(0), proj(1)],
            TraceMode::TracePreserving,
            1e-12,
        )
        .unwrap();
        let res = power_limit_classify(&t, 1e-10, 200);
        assert!(res.idempotent_defect <= 1e-9);
        match res.kind {
            Idempotent::ProjectiveMeasurement(p1, p2) => {
                let sum = &p1 + &p2;
                assert!(linalg::max_abs_diff(&sum, &linalg::identity(2)) < 1e-8);
            }
            other => panic!("expected projective measurement, got {other:?}"),
        }
    }

    #[test]
    fn classify_identity_channel() {
        let res = power_limit_classify(&Channel::identity(2), 1e-10, 200);
        assert!(matches!(res.kind, Idempotent::Identity));
        assert!(res.idempotent_defect <= 1e-12);
    }

    #[test]
    fn classify_sigma_x_unitary_reaches_x_basis_dephasing() {
        let t = Channel::unitary(&linalg::pauli_x(), 1e-12).unwrap();
        let res = power_limit_classify(&t, 1e-10, 200);
        assert!(res.idempotent_defect <= 1e-9);
        match res.kind {
            Idempotent::ProjectiveMeasurement(p1, p2) => {
                // projectors onto the sigma_x eigenbasis
                for p in [&p1, &p2] {
                    let commutator = p * linalg::pauli_x() - linalg::pauli_x() * p;
                    assert!(linalg::frobenius_norm(&commutator) < 1e-8);
                }
            }
            other => panic!("expected x-basis dephasing, got {other:?}"),
        }
    }

    #[test]
    fn universal_evidence_for_depolarizing_machine() {
        let mut r = rng();
        let suite: Vec<Channel> = (0..5)
            .map(|_| Channel::unitary(&linalg::haar_random_unitary(4, &mut r), 1e-9).unwrap())
            .collect();
        let report =
            is_universal_evidence(&depolarize_to_max_mixed(2), &suite, 2, 2, 1, 1e-9, 5).unwrap();
        assert!(report.point_collapse_machine);
        assert!(report.passed, "{:?}", report.entries);
    }

    #[test]
    fn universal_evidence_fails_for_identity_machine_with_cnot() {
        let suite = vec![Channel::unitary(&linalg::cnot(), 1e-9).unwrap()];
        let report =
            is_universal_evidence(&Channel::identity(2), &suite, 2, 2, 0, 1e-9, 5).unwrap();
        assert!(!report.passed);
        assert!(!report.entries[0].linear_ok, "{:?}", report.entries[0]);
    }

    #[test]
    fn composition_with_universal_stays_universal() {
        let mut r = rng();
        let v = linalg::haar_random_unitary(2, &mut r);
        let machine = Channel::unitary(&v, 1e-9)
            .unwrap()
            .compose(&depolarize_to_max_mixed(2))
            .unwrap();
        let suite: Vec<Channel> = (0..3)
            .map(|_| Channel::unitary(&linalg::haar_random_unitary(4, &mut r), 1e-9).unwrap())
            .collect();
        let report = is_universal_evidence(&machine, &suite, 2, 2, 1, 1e-9, 5).unwrap();
        assert!(report.passed, "{:?}", report.entries);
    }

    #[test]
    fn channel_validation() {
        let bad = Channel::new(
            vec![linalg::identity(2), linalg::pauli_x()],
            TraceMode::TracePreserving,
            1e-10,
        );
        assert!(matches!(bad, Err(ThickCtcError::KrausInvariant { .. })));
        let half = Channel::new(
            vec![linalg::identity(2).scale(0.5)],
            TraceMode::TraceNonIncreasing,
            1e-10,
        );
        assert!(half.is_ok());
    }

    #[test]
    fn fixed_point_is_valid_state() {
        let mut r = rng();
        for _ in 0..10 {
            let u = linalg::haar_random_unitary(4, &mut r);
            let rho = linalg::random_density_matrix(2, &mut r);
            let loop_port = r.gen_range(0..2usize);
            let (rho_ctc, _) =
                deutsch_fixed_point(&u, &rho, 2, 2, loop_port, 1e-10, 10_000).unwrap();
            assert!(linalg::hermiticity_defect(&rho_ctc) < 1e-10);
            assert!((rho_ctc.trace().re - 1.0).abs() < 1e-10);
            assert!(linalg::min_eigenvalue(&rho_ctc) > -1e-9);
            let back = deutsch_round(&u, &rho, &rho_ctc, 2, 2, loop_port);
            assert!(linalg::frobenius_norm(&(back - &rho_ctc)) <= 1e-10);
        }
    }
}
