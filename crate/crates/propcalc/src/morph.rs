//! Dense complex tensors with typed legs and the morph algebra: metadata
//! reversal, Riesz conjugation, composition, partial trace, tensor
//! product, inner product and basis frames.
//!
//! A [`Morph`] is the universal value of the crate: the same tensor plays
//! the role of state, effect, operator or channel depending on how its
//! legs are typed. All operations address legs by port index; space
//! labels only gate legality.

use crate::linalg::{self, CMat, CVec, C64};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MorphError {
    #[error("port {port} out of range for morph with {len} legs")]
    PortOutOfRange { port: usize, len: usize },
    #[error("leg mismatch between port {a} and port {b}: {reason}")]
    LegMismatch { a: usize, b: usize, reason: String },
    #[error("duplicate port {0} in contraction")]
    DuplicatePort(usize),
    #[error("row/column ports do not partition the legs")]
    BadPartition,
    #[error("data length {got} does not match leg dims (expected {expected})")]
    BadDataLength { got: usize, expected: usize },
    #[error("leg signatures differ: {0}")]
    SignatureMismatch(String),
    #[error("frame dimension {frame} does not match leg dimension {leg}")]
    FrameDimMismatch { frame: usize, leg: usize },
    #[error("frame rows are not orthonormal (defect {0:.3e})")]
    FrameNotOrthonormal(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::In => Direction::Out,
            Direction::Out => Direction::In,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Essence {
    Physical,
    Virtual,
}

impl Essence {
    pub fn flipped(self) -> Self {
        match self {
            Essence::Physical => Essence::Virtual,
            Essence::Virtual => Essence::Physical,
        }
    }
}

/// The type of one tensor axis: space label, dimension, direction and
/// essence. "opposite" flips both attributes, "bar" flips essence only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Leg {
    pub space: String,
    pub dim: usize,
    pub direction: Direction,
    pub essence: Essence,
}

impl Leg {
    pub fn new(space: impl Into<String>, dim: usize, direction: Direction, essence: Essence) -> Self {
        assert!(dim >= 1, "leg dimension must be at least 1");
        Leg { space: space.into(), dim, direction, essence }
    }

    pub fn opposite(&self) -> Leg {
        Leg {
            space: self.space.clone(),
            dim: self.dim,
            direction: self.direction.flipped(),
            essence: self.essence.flipped(),
        }
    }

    pub fn barred(&self) -> Leg {
        Leg {
            space: self.space.clone(),
            dim: self.dim,
            direction: self.direction,
            essence: self.essence.flipped(),
        }
    }
}

/// Dense complex tensor with an ordered list of typed legs. Data is
/// row-major over the legs in listed order; an empty leg list holds
/// exactly one element (a scalar).
#[derive(Debug, Clone, PartialEq)]
pub struct Morph {
    legs: Vec<Leg>,
    data: Vec<C64>,
}

fn strides(legs: &[Leg]) -> Vec<usize> {
    let mut s = vec![1usize; legs.len()];
    for i in (0..legs.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * legs[i + 1].dim;
    }
    s
}

/// Iterates multi-indices over the given dims in row-major order.
struct Odometer {
    dims: Vec<usize>,
    idx: Vec<usize>,
    done: bool,
}

impl Odometer {
    fn new(dims: Vec<usize>) -> Self {
        let done = dims.iter().any(|&d| d == 0);
        let idx = vec![0; dims.len()];
        Odometer { dims, idx, done }
    }
}

impl Iterator for Odometer {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let mut k = self.dims.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.idx[k] += 1;
            if self.idx[k] < self.dims[k] {
                break;
            }
            self.idx[k] = 0;
        }
        Some(out)
    }
}

impl Morph {
    pub fn new(legs: Vec<Leg>, data: Vec<C64>) -> Result<Self, MorphError> {
        let expected: usize = legs.iter().map(|l| l.dim).product();
        if data.len() != expected {
            return Err(MorphError::BadDataLength { got: data.len(), expected });
        }
        debug_assert!(data.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Ok(Morph { legs, data })
    }

    pub fn scalar(z: C64) -> Self {
        Morph { legs: vec![], data: vec![z] }
    }

    /// Identity morph on a space: legs (In, Out), both physical.
    pub fn delta(space: impl Into<String>, dim: usize) -> Self {
        let space = space.into();
        let legs = vec![
            Leg::new(space.clone(), dim, Direction::In, Essence::Physical),
            Leg::new(space, dim, Direction::Out, Essence::Physical),
        ];
        let mut data = vec![linalg::cr(0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = linalg::cr(1.0);
        }
        Morph { legs, data }
    }

    /// State vector as a single Out/Physical leg.
    pub fn from_state(v: &CVec, space: impl Into<String>) -> Self {
        let legs = vec![Leg::new(space, v.len(), Direction::Out, Essence::Physical)];
        Morph { legs, data: v.iter().copied().collect() }
    }

    /// Operator `M: H -> H` as legs (Out row, In col), data row-major
    /// equal to the matrix, so `to_matrix(&[0], &[1])` returns `M` back.
    pub fn from_operator(m: &CMat, space: impl Into<String>) -> Self {
        let space = space.into();
        let (r, c) = m.shape();
        let legs = vec![
            Leg::new(space.clone(), r, Direction::Out, Essence::Physical),
            Leg::new(space, c, Direction::In, Essence::Physical),
        ];
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                data.push(m[(i, j)]);
            }
        }
        Morph { legs, data }
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn rank(&self) -> usize {
        self.legs.len()
    }

    pub fn elements(&self) -> usize {
        self.data.len()
    }

    pub fn as_scalar(&self) -> Option<C64> {
        if self.legs.is_empty() {
            Some(self.data[0])
        } else {
            None
        }
    }

    fn check_port(&self, port: usize) -> Result<(), MorphError> {
        if port >= self.legs.len() {
            Err(MorphError::PortOutOfRange { port, len: self.legs.len() })
        } else {
            Ok(())
        }
    }

    /// Canonical isomorphism: flip direction and essence of one leg.
    /// The data array is untouched (metadata-only reversal).
    pub fn opposite(&self, port: usize) -> Result<Morph, MorphError> {
        self.check_port(port)?;
        let mut legs = self.legs.clone();
        legs[port] = legs[port].opposite();
        Ok(Morph { legs, data: self.data.clone() })
    }

    /// Riesz conjugate: conjugate the data, flip every leg's essence.
    pub fn bar(&self) -> Morph {
        Morph {
            legs: self.legs.iter().map(Leg::barred).collect(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Adjoint: opposite applied to every leg of the Riesz conjugate.
    /// On a square operator view this is the conjugate transpose.
    pub fn adjoint(&self) -> Morph {
        Morph {
            legs: self.legs.iter().map(|l| l.barred().opposite()).collect(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Axis permutation: leg `k` of the result is leg `order[k]` of self.
    pub fn permute(&self, order: &[usize]) -> Result<Morph, MorphError> {
        if order.len() != self.legs.len() {
            return Err(MorphError::BadPartition);
        }
        let mut seen = vec![false; order.len()];
        for &p in order {
            self.check_port(p)?;
            if seen[p] {
                return Err(MorphError::DuplicatePort(p));
            }
            seen[p] = true;
        }
        let legs: Vec<Leg> = order.iter().map(|&p| self.legs[p].clone()).collect();
        let old_strides = strides(&self.legs);
        let dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
        let mut data = Vec::with_capacity(self.data.len());
        for idx in Odometer::new(dims) {
            let mut off = 0;
            for (k, &i) in idx.iter().enumerate() {
                off += i * old_strides[order[k]];
            }
            data.push(self.data[off]);
        }
        Ok(Morph { legs, data })
    }

    /// Outer product: legs of self then legs of other.
    pub fn tensor(&self, other: &Morph) -> Morph {
        let mut legs = self.legs.clone();
        legs.extend(other.legs.iter().cloned());
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Morph { legs, data }
    }

    fn check_contractible(a: &Leg, b: &Leg, pa: usize, pb: usize) -> Result<(), MorphError> {
        let fail = |reason: &str| MorphError::LegMismatch { a: pa, b: pb, reason: reason.into() };
        if a.space != b.space {
            return Err(fail(&format!("space {} vs {}", a.space, b.space)));
        }
        if a.dim != b.dim {
            return Err(fail(&format!("dim {} vs {}", a.dim, b.dim)));
        }
        if a.essence != b.essence {
            return Err(fail("essence clash"));
        }
        if a.direction == b.direction {
            return Err(fail(match a.direction {
                Direction::In => "both legs are In",
                Direction::Out => "both legs are Out",
            }));
        }
        Ok(())
    }

    /// Compose two morphs over the given port pairs. Each pair must join
    /// an Out leg of one with an In leg of the other, with equal space,
    /// dimension and essence. Remaining legs of `self` come first, then
    /// those of `other`, both in original order.
    pub fn compose(&self, other: &Morph, pairs: &[(usize, usize)]) -> Result<Morph, MorphError> {
        let mut used_a = vec![false; self.legs.len()];
        let mut used_b = vec![false; other.legs.len()];
        for &(pa, pb) in pairs {
            self.check_port(pa)?;
            other.check_port(pb)?;
            if used_a[pa] {
                return Err(MorphError::DuplicatePort(pa));
            }
            if used_b[pb] {
                return Err(MorphError::DuplicatePort(pb));
            }
            used_a[pa] = true;
            used_b[pb] = true;
            Self::check_contractible(&self.legs[pa], &other.legs[pb], pa, pb)?;
        }
        let free_a: Vec<usize> = (0..self.legs.len()).filter(|&p| !used_a[p]).collect();
        let free_b: Vec<usize> = (0..other.legs.len()).filter(|&p| !used_b[p]).collect();
        let sa = strides(&self.legs);
        let sb = strides(&other.legs);
        let mut legs = Vec::with_capacity(free_a.len() + free_b.len());
        legs.extend(free_a.iter().map(|&p| self.legs[p].clone()));
        legs.extend(free_b.iter().map(|&p| other.legs[p].clone()));
        let out_dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
        let sum_dims: Vec<usize> = pairs.iter().map(|&(pa, _)| self.legs[pa].dim).collect();
        let n_out: usize = out_dims.iter().product();
        let mut data = vec![linalg::cr(0.0); n_out.max(1)];
        // precompute contracted stride sums
        let pair_strides: Vec<(usize, usize)> =
            pairs.iter().map(|&(pa, pb)| (sa[pa], sb[pb])).collect();
        for (flat, out_idx) in Odometer::new(out_dims).enumerate() {
            let mut base_a = 0usize;
            let mut base_b = 0usize;
            for (k, &p) in free_a.iter().enumerate() {
                base_a += out_idx[k] * sa[p];
            }
            for (k, &p) in free_b.iter().enumerate() {
                base_b += out_idx[free_a.len() + k] * sb[p];
            }
            let mut acc = linalg::cr(0.0);
            for sum_idx in Odometer::new(sum_dims.clone()) {
                let mut oa = base_a;
                let mut ob = base_b;
                for (k, &i) in sum_idx.iter().enumerate() {
                    oa += i * pair_strides[k].0;
                    ob += i * pair_strides[k].1;
                }
                acc += self.data[oa] * other.data[ob];
            }
            data[flat] = acc;
        }
        if self.legs.len() == pairs.len() && other.legs.len() == pairs.len() {
            // fully contracted: scalar
            return Ok(Morph { legs: vec![], data: vec![data[0]] });
        }
        Ok(Morph { legs, data })
    }

    /// Partial trace over a pair of this morph's own legs with equal
    /// space, dimension and essence and opposite directions.
    pub fn partial_trace(&self, port_a: usize, port_b: usize) -> Result<Morph, MorphError> {
        self.check_port(port_a)?;
        self.check_port(port_b)?;
        if port_a == port_b {
            return Err(MorphError::DuplicatePort(port_a));
        }
        Self::check_contractible(&self.legs[port_a], &self.legs[port_b], port_a, port_b)?;
        let s = strides(&self.legs);
        let d = self.legs[port_a].dim;
        let keep: Vec<usize> =
            (0..self.legs.len()).filter(|&p| p != port_a && p != port_b).collect();
        let legs: Vec<Leg> = keep.iter().map(|&p| self.legs[p].clone()).collect();
        let dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
        let mut data = Vec::with_capacity(dims.iter().product::<usize>().max(1));
        for idx in Odometer::new(dims) {
            let mut base = 0usize;
            for (k, &p) in keep.iter().enumerate() {
                base += idx[k] * s[p];
            }
            let mut acc = linalg::cr(0.0);
            for i in 0..d {
                acc += self.data[base + i * (s[port_a] + s[port_b])];
            }
            data.push(acc);
        }
        if data.is_empty() {
            // zero remaining legs still yields one scalar element
            let mut acc = linalg::cr(0.0);
            for i in 0..d {
                acc += self.data[i * (s[port_a] + s[port_b])];
            }
            data.push(acc);
        }
        Ok(Morph { legs, data })
    }

    /// Hilbert-space inner product `(self, other) = Tr(self^* other)`:
    /// requires identical leg signatures.
    pub fn inner(&self, other: &Morph) -> Result<C64, MorphError> {
        if self.legs != other.legs {
            return Err(MorphError::SignatureMismatch(format!(
                "{} legs vs {} legs or differing leg types",
                self.legs.len(),
                other.legs.len()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Matrix view with rows grouped over `row_ports` and columns over
    /// `col_ports` (row-major within each group). The two lists must
    /// partition the ports.
    pub fn to_matrix(&self, row_ports: &[usize], col_ports: &[usize]) -> Result<CMat, MorphError> {
        let mut seen = vec![false; self.legs.len()];
        for &p in row_ports.iter().chain(col_ports.iter()) {
            self.check_port(p)?;
            if seen[p] {
                return Err(MorphError::BadPartition);
            }
            seen[p] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(MorphError::BadPartition);
        }
        let s = strides(&self.legs);
        let rdims: Vec<usize> = row_ports.iter().map(|&p| self.legs[p].dim).collect();
        let cdims: Vec<usize> = col_ports.iter().map(|&p| self.legs[p].dim).collect();
        let nr: usize = rdims.iter().product();
        let nc: usize = cdims.iter().product();
        let mut m = CMat::zeros(nr, nc);
        for (i, ridx) in Odometer::new(rdims).enumerate() {
            let mut roff = 0usize;
            for (k, &p) in row_ports.iter().enumerate() {
                roff += ridx[k] * s[p];
            }
            for (j, cidx) in Odometer::new(cdims.clone()).enumerate() {
                let mut off = roff;
                for (k, &p) in col_ports.iter().enumerate() {
                    off += cidx[k] * s[p];
                }
                m[(i, j)] = self.data[off];
            }
        }
        Ok(m)
    }

    /// Inverse of [`Morph::to_matrix`]: rebuild a morph with the given
    /// legs from a matrix whose rows/columns group the listed ports.
    pub fn from_matrix(
        m: &CMat,
        legs: Vec<Leg>,
        row_ports: &[usize],
        col_ports: &[usize],
    ) -> Result<Morph, MorphError> {
        let zero: usize = legs.iter().map(|l| l.dim).product();
        let template = Morph { legs, data: vec![linalg::cr(0.0); zero.max(1)] };
        let s = strides(&template.legs);
        let mut seen = vec![false; template.legs.len()];
        for &p in row_ports.iter().chain(col_ports.iter()) {
            template.check_port(p)?;
            if seen[p] {
                return Err(MorphError::BadPartition);
            }
            seen[p] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(MorphError::BadPartition);
        }
        let rdims: Vec<usize> = row_ports.iter().map(|&p| template.legs[p].dim).collect();
        let cdims: Vec<usize> = col_ports.iter().map(|&p| template.legs[p].dim).collect();
        let mut data = template.data;
        for (i, ridx) in Odometer::new(rdims).enumerate() {
            let mut roff = 0usize;
            for (k, &p) in row_ports.iter().enumerate() {
                roff += ridx[k] * s[p];
            }
            for (j, cidx) in Odometer::new(cdims.clone()).enumerate() {
                let mut off = roff;
                for (k, &p) in col_ports.iter().enumerate() {
                    off += cidx[k] * s[p];
                }
                data[off] = m[(i, j)];
            }
        }
        Ok(Morph { legs: template.legs, data })
    }

    /// Re-express every leg on `space` in the given frame. Fully
    /// contracted diagram values are invariant under rebase of internal
    /// spaces by unitary frames.
    pub fn rebase(&self, space: &str, frame: &Frame) -> Result<Morph, MorphError> {
        if frame.space != space {
            return Err(MorphError::SignatureMismatch(format!(
                "frame is for space {} not {}",
                frame.space, space
            )));
        }
        let mut out = self.clone();
        for port in 0..self.legs.len() {
            if self.legs[port].space == space {
                if self.legs[port].dim != frame.dim() {
                    return Err(MorphError::FrameDimMismatch {
                        frame: frame.dim(),
                        leg: self.legs[port].dim,
                    });
                }
                out = out.apply_frame_to_port(port, frame);
            }
        }
        Ok(out)
    }

    fn apply_frame_to_port(&self, port: usize, frame: &Frame) -> Morph {
        let leg = &self.legs[port];
        // Component extraction pairs each leg with the frame variant that
        // keeps every contracted wire contragredient: conj(E) when
        // direction and essence agree in the (Out, Physical) sense.
        let conjugate = (leg.direction == Direction::Out) == (leg.essence == Essence::Physical);
        let d = leg.dim;
        let e = &frame.vectors;
        let s = strides(&self.legs);
        let dims: Vec<usize> = self.legs.iter().map(|l| l.dim).collect();
        let mut data = vec![linalg::cr(0.0); self.data.len()];
        for (flat, idx) in Odometer::new(dims).enumerate() {
            let mut base = 0usize;
            for (k, &i) in idx.iter().enumerate() {
                if k != port {
                    base += i * s[k];
                }
            }
            let alpha = idx[port];
            let mut acc = linalg::cr(0.0);
            for a in 0..d {
                let coeff = if conjugate { e[(alpha, a)].conj() } else { e[(alpha, a)] };
                acc += coeff * self.data[base + a * s[port]];
            }
            data[flat] = acc;
        }
        Morph { legs: self.legs.clone(), data }
    }

    pub fn max_abs_diff(&self, other: &Morph) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Random morph with the given legs, complex-Gaussian entries.
    pub fn random<R: Rng>(legs: Vec<Leg>, rng: &mut R) -> Morph {
        let n: usize = legs.iter().map(|l| l.dim).product();
        let g = linalg::random_complex_matrix(n.max(1), 1, rng);
        Morph { legs, data: g.iter().copied().collect() }
    }
}

/// An orthonormal basis for one space (a d-bein): rows of `vectors` are
/// the basis vectors expressed in the standard basis.
#[derive(Debug, Clone)]
pub struct Frame {
    space: String,
    vectors: CMat,
}

impl Frame {
    pub fn new(space: impl Into<String>, vectors: CMat) -> Result<Self, MorphError> {
        let d = vectors.nrows();
        if vectors.ncols() != d {
            return Err(MorphError::FrameDimMismatch { frame: vectors.ncols(), leg: d });
        }
        let defect = linalg::max_abs_diff(&(&vectors * vectors.adjoint()), &linalg::identity(d));
        if defect > 1e-12 {
            return Err(MorphError::FrameNotOrthonormal(defect));
        }
        Ok(Frame { space: space.into(), vectors })
    }

    pub fn standard(space: impl Into<String>, dim: usize) -> Self {
        Frame { space: space.into(), vectors: linalg::identity(dim) }
    }

    pub fn space(&self) -> &str {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }

    pub fn random<R: Rng>(space: impl Into<String>, dim: usize, rng: &mut R) -> Self {
        // haar unitary rows are an orthonormal basis
        Frame { space: space.into(), vectors: linalg::haar_random_unitary(dim, rng) }
    }
}
