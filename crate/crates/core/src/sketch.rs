//! The Theta-sketch of a parametric problem: compressed images of the
//! reduced basis, the residual operator factors, the right-hand side, and
//! the output functional. Everything downstream (sketched Galerkin models,
//! residual estimators, sketched POD and greedy) works from this container
//! instead of full-order vectors.
//!
//! Layout: one growable column-major buffer per affine term, so appending a
//! snapshot extends every buffer without touching existing bytes, and
//! merging two sketches is pure concatenation.

use std::io::{Read as IoRead, Write as IoWrite};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::affine::CoeffFn;
use crate::embeddings::{EmbId, EmbeddingKind, EmbeddingSpec, UEmbedding};
use crate::error::{Error, Result};
use crate::problem::ParametricProblem;
use crate::scalar::{FieldTag, Scalar};

/// Sketch of a single snapshot: `Theta u`, the residual-factor images
/// `Theta R_U^{-1} A_i u`, and the output-factor values `l_i^H u`. Holds
/// only `k`-vectors and scalars; the full vector is not retained.
pub struct SketchColumn<T: Scalar> {
    pub theta_u: DVector<T>,
    pub theta_res: Vec<DVector<T>>,
    pub l_u: Vec<T>,
}

/// Sketches one snapshot. Costs exactly `m_A + 1` embedding applications
/// and `m_A` inner-product solves, which instrumentation counters in the
/// embedding and the space make checkable.
pub fn sketch_snapshot<T: Scalar>(
    problem: &ParametricProblem<T>,
    theta: &UEmbedding<T>,
    u: &DVector<T>,
) -> Result<SketchColumn<T>> {
    if u.len() != problem.dim() {
        return Err(Error::argument(format!(
            "snapshot has length {}, problem dimension is {}",
            u.len(),
            problem.dim()
        )));
    }
    let theta_u = theta.apply(u)?;
    let mut theta_res = Vec::with_capacity(problem.a.num_terms());
    for i in 0..problem.a.num_terms() {
        let w = problem.a.factor(i).matvec(u);
        let y = problem.space.solve_ru(&w);
        theta_res.push(theta.apply(&y)?);
    }
    let mut l_u = Vec::with_capacity(problem.l.num_terms());
    for i in 0..problem.l.num_terms() {
        l_u.push(problem.l.vector_factor(i)?.dotc(u));
    }
    Ok(SketchColumn { theta_u, theta_res, l_u })
}

/// Sketch of a reduced basis `U_r`under an embedding `Theta` of the
/// solution space:
///
/// * `ub = Theta U_r` (`k x r`),
/// * `v[i] = Theta R_U^{-1} A_i U_r` (`k x r` per operator term),
/// * `b[i] = Theta R_U^{-1} b_i` (`k` per right-hand-side term, fixed at
///   construction),
/// * `l[i] = U_r^H l_i` (`r` per output term),
///
/// together with the coefficient functions of the originating problem and
/// the identity of `Theta`.
pub struct ThetaSketch<T: Scalar> {
    k: usize,
    r: usize,
    emb_id: EmbId,
    ub: Vec<T>,
    v: Vec<Vec<T>>,
    a_coeffs: Vec<CoeffFn>,
    b: Vec<DVector<T>>,
    b_coeffs: Vec<CoeffFn>,
    l: Vec<Vec<T>>,
    l_coeffs: Vec<CoeffFn>,
}

impl<T: Scalar> ThetaSketch<T> {
    /// Empty sketch (`r = 0`). Computes the right-hand-side images, which
    /// costs `m_b` embedding applications and `m_b` solves once.
    pub fn new(problem: &ParametricProblem<T>, theta: &UEmbedding<T>) -> Result<ThetaSketch<T>> {
        if theta.space().fingerprint() != problem.space.fingerprint() {
            return Err(Error::argument(
                "embedding and problem use different inner-product spaces".to_string(),
            ));
        }
        let m_a = problem.a.num_terms();
        let mut b = Vec::with_capacity(problem.b.num_terms());
        for i in 0..problem.b.num_terms() {
            let bi = problem.b.vector_factor(i)?;
            b.push(theta.apply(&problem.space.solve_ru(&bi))?);
        }
        Ok(ThetaSketch {
            k: theta.k(),
            r: 0,
            emb_id: theta.id(),
            ub: Vec::new(),
            v: vec![Vec::new(); m_a],
            a_coeffs: problem.a.coeffs().to_vec(),
            b,
            b_coeffs: problem.b.coeffs().to_vec(),
            l: vec![Vec::new(); problem.l.num_terms()],
            l_coeffs: problem.l.coeffs().to_vec(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn emb_id(&self) -> EmbId {
        self.emb_id
    }

    pub fn num_operator_terms(&self) -> usize {
        self.v.len()
    }

    pub fn num_rhs_terms(&self) -> usize {
        self.b.len()
    }

    pub fn num_output_terms(&self) -> usize {
        self.l.len()
    }

    /// Appends one sketched snapshot; previous columns stay bit-identical.
    pub fn append(&mut self, col: SketchColumn<T>) -> Result<()> {
        if col.theta_u.len() != self.k
            || col.theta_res.len() != self.v.len()
            || col.theta_res.iter().any(|c| c.len() != self.k)
            || col.l_u.len() != self.l.len()
        {
            return Err(Error::argument(
                "sketch column dimensions do not match the sketch".to_string(),
            ));
        }
        self.ub.extend_from_slice(col.theta_u.as_slice());
        for (buf, c) in self.v.iter_mut().zip(&col.theta_res) {
            buf.extend_from_slice(c.as_slice());
        }
        for (buf, &val) in self.l.iter_mut().zip(&col.l_u) {
            // Stored factor is U_r^H l_i, so the new entry is u^H l_i.
            buf.push(val.conjugate());
        }
        self.r += 1;
        Ok(())
    }

    /// Column concatenation: `self`'s columns first. Requires identical
    /// embedding identity and affine structure.
    pub fn merge(&self, other: &ThetaSketch<T>) -> Result<ThetaSketch<T>> {
        if self.emb_id != other.emb_id {
            return Err(Error::argument(
                "cannot merge sketches built under different embeddings".to_string(),
            ));
        }
        if self.a_coeffs != other.a_coeffs
            || self.b_coeffs != other.b_coeffs
            || self.l_coeffs != other.l_coeffs
            || self.v.len() != other.v.len()
            || self.l.len() != other.l.len()
        {
            return Err(Error::argument(
                "cannot merge sketches of different affine structures".to_string(),
            ));
        }
        if self.b.len() != other.b.len()
            || self
                .b
                .iter()
                .zip(&other.b)
                .any(|(x, y)| x.as_slice() != y.as_slice())
        {
            return Err(Error::argument(
                "sketches disagree on right-hand-side images".to_string(),
            ));
        }
        let mut out = ThetaSketch {
            k: self.k,
            r: self.r + other.r,
            emb_id: self.emb_id,
            ub: self.ub.clone(),
            v: self.v.clone(),
            a_coeffs: self.a_coeffs.clone(),
            b: self.b.clone(),
            b_coeffs: self.b_coeffs.clone(),
            l: self.l.clone(),
            l_coeffs: self.l_coeffs.clone(),
        };
        out.ub.extend_from_slice(&other.ub);
        for (buf, src) in out.v.iter_mut().zip(&other.v) {
            buf.extend_from_slice(src);
        }
        for (buf, src) in out.l.iter_mut().zip(&other.l) {
            buf.extend_from_slice(src);
        }
        Ok(out)
    }

    pub fn ub_matrix(&self) -> DMatrix<T> {
        DMatrix::from_column_slice(self.k, self.r, &self.ub)
    }

    pub fn v_factor(&self, i: usize) -> DMatrix<T> {
        DMatrix::from_column_slice(self.k, self.r, &self.v[i])
    }

    pub fn b_factor(&self, i: usize) -> &DVector<T> {
        &self.b[i]
    }

    pub fn l_factor(&self, i: usize) -> DVector<T> {
        DVector::from_column_slice(&self.l[i])
    }

    pub fn operator_coeffs(&self) -> &[CoeffFn] {
        &self.a_coeffs
    }

    pub fn rhs_coeffs(&self) -> &[CoeffFn] {
        &self.b_coeffs
    }

    pub fn output_coeffs(&self) -> &[CoeffFn] {
        &self.l_coeffs
    }

    /// `V_r^Theta(mu) = sum_i phi_i^A(mu) v[i]`.
    pub fn evaluate_v(&self, mu: &[f64]) -> Result<DMatrix<T>> {
        let mut out = DMatrix::zeros(self.k, self.r);
        for (buf, coeff) in self.v.iter().zip(&self.a_coeffs) {
            let c: T = coeff.eval(mu)?;
            for (o, &x) in out.as_mut_slice().iter_mut().zip(buf.iter()) {
                *o += c * x;
            }
        }
        Ok(out)
    }

    /// `b^Theta(mu) = sum_i phi_i^b(mu) b[i]`.
    pub fn evaluate_b(&self, mu: &[f64]) -> Result<DVector<T>> {
        let mut out = DVector::zeros(self.k);
        for (bi, coeff) in self.b.iter().zip(&self.b_coeffs) {
            let c: T = coeff.eval(mu)?;
            out.axpy(c, bi, T::one());
        }
        Ok(out)
    }

    /// `l_r(mu) = U_r^H l(mu)`, so the reduced output is `l_r(mu)^H a_r`.
    pub fn evaluate_l(&self, mu: &[f64]) -> Result<DVector<T>> {
        let mut out = DVector::zeros(self.r);
        for (li, coeff) in self.l.iter().zip(&self.l_coeffs) {
            let c: T = coeff.eval(mu)?;
            for (o, &x) in out.iter_mut().zip(li.iter()) {
                *o += c * x;
            }
        }
        Ok(out)
    }

    /// Change of reduced basis `U_r -> U_r X`: every per-column object is
    /// right-multiplied, output factors become `X^H l`.
    pub fn transformed(&self, x: &DMatrix<T>) -> Result<ThetaSketch<T>> {
        if x.nrows() != self.r {
            return Err(Error::argument(format!(
                "transform has {} rows, sketch has r = {}",
                x.nrows(),
                self.r
            )));
        }
        let rank = x.ncols();
        let ub = (self.ub_matrix() * x).as_slice().to_vec();
        let v = (0..self.v.len())
            .map(|i| (self.v_factor(i) * x).as_slice().to_vec())
            .collect();
        let l = (0..self.l.len())
            .map(|i| {
                let g = x.adjoint() * self.l_factor(i);
                g.as_slice().to_vec()
            })
            .collect();
        Ok(ThetaSketch {
            k: self.k,
            r: rank,
            emb_id: self.emb_id,
            ub,
            v,
            a_coeffs: self.a_coeffs.clone(),
            b: self.b.clone(),
            b_coeffs: self.b_coeffs.clone(),
            l,
            l_coeffs: self.l_coeffs.clone(),
        })
    }

    /// Sketch-level orthogonalization: returns the sketch of `U_r T_r`
    /// where `Theta U_r T_r` has orthonormal columns, plus `T_r` itself.
    /// Full rank uses QR, so `T_r` is upper triangular; singular values
    /// below `1e-12 sigma_max` trigger truncation to the numerical rank
    /// (with a warning) via the SVD instead.
    pub fn orthogonalize(&self) -> Result<(ThetaSketch<T>, DMatrix<T>)> {
        if self.r == 0 {
            return Err(Error::argument("cannot orthogonalize an empty sketch".to_string()));
        }
        let m = self.ub_matrix();
        let svd = nalgebra::SVD::new(m.clone(), true, true);
        let s = &svd.singular_values;
        let smax = s.iter().cloned().fold(0.0f64, f64::max);
        if smax == 0.0 {
            return Err(Error::numerical("sketched basis is zero".to_string()));
        }
        let rank = s.iter().filter(|&&v| v > 1e-12 * smax).count();
        let t = if rank == self.r && self.k >= self.r {
            let qr = m.qr();
            let rmat = qr.r();
            rmat.solve_upper_triangular(&DMatrix::identity(self.r, self.r))
                .ok_or_else(|| {
                    Error::numerical("triangular factor is singular".to_string())
                })?
        } else {
            log::warn!(
                "sketched basis has numerical rank {rank} < {}; truncating",
                self.r
            );
            let vt = svd
                .v_t
                .ok_or_else(|| Error::numerical("SVD failed".to_string()))?;
            let mut x = vt.rows(0, rank).into_owned().adjoint();
            for c in 0..rank {
                let inv = 1.0 / s[c];
                for row in 0..x.nrows() {
                    x[(row, c)] = x[(row, c)].mul_real(inv);
                }
            }
            x
        };
        Ok((self.transformed(&t)?, t))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_to(&mut f)
    }

    pub fn load(path: &Path) -> Result<ThetaSketch<T>> {
        let mut f = std::fs::File::open(path)?;
        ThetaSketch::read_from(&mut f)
    }

    pub fn write_to<W: IoWrite>(&self, w: &mut W) -> Result<()> {
        w.write_all(MAGIC)?;
        write_u32(w, FORMAT_VERSION)?;
        w.write_all(&[T::FIELD.as_u8()])?;
        for val in [
            self.k as u64,
            self.r as u64,
            self.v.len() as u64,
            self.b.len() as u64,
            self.l.len() as u64,
        ] {
            write_u64(w, val)?;
        }
        let spec = self.emb_id.spec;
        w.write_all(&[kind_to_u8(spec.kind)])?;
        write_u64(w, spec.k as u64)?;
        write_u64(w, spec.n as u64)?;
        write_u64(w, spec.seed)?;
        write_u64(w, self.emb_id.q_fingerprint)?;
        for coeffs in [&self.a_coeffs, &self.b_coeffs, &self.l_coeffs] {
            let blob = serde_json::to_vec(coeffs).map_err(|e| Error::format(e.to_string()))?;
            write_u64(w, blob.len() as u64)?;
            w.write_all(&blob)?;
        }
        write_scalars(w, &self.ub)?;
        for buf in &self.v {
            write_scalars(w, buf)?;
        }
        for bvec in &self.b {
            write_scalars(w, bvec.as_slice())?;
        }
        for lvec in &self.l {
            write_scalars(w, lvec)?;
        }
        Ok(())
    }

    pub fn read_from<R: IoRead>(r: &mut R) -> Result<ThetaSketch<T>> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::format("not a sketch file".to_string()));
        }
        let version = read_u32(r)?;
        if version != FORMAT_VERSION {
            return Err(Error::format(format!("unsupported sketch format version {version}")));
        }
        let field = FieldTag::from_u8(read_u8(r)?)?;
        if field != T::FIELD {
            return Err(Error::format(format!(
                "sketch holds {field:?} data, requested {:?}",
                T::FIELD
            )));
        }
        let k = read_u64(r)? as usize;
        let rr = read_u64(r)? as usize;
        let m_a = read_u64(r)? as usize;
        let m_b = read_u64(r)? as usize;
        let m_l = read_u64(r)? as usize;
        let kind = kind_from_u8(read_u8(r)?)?;
        let ek = read_u64(r)? as usize;
        let en = read_u64(r)? as usize;
        let seed = read_u64(r)?;
        let q_fingerprint = read_u64(r)?;
        let mut coeff_lists = Vec::with_capacity(3);
        for _ in 0..3 {
            let len = read_u64(r)? as usize;
            let mut blob = vec![0u8; len];
            r.read_exact(&mut blob)?;
            let coeffs: Vec<CoeffFn> =
                serde_json::from_slice(&blob).map_err(|e| Error::format(e.to_string()))?;
            coeff_lists.push(coeffs);
        }
        let l_coeffs = coeff_lists.pop().unwrap();
        let b_coeffs = coeff_lists.pop().unwrap();
        let a_coeffs = coeff_lists.pop().unwrap();
        let ub = read_scalars::<T, R>(r, k * rr)?;
        let mut v = Vec::with_capacity(m_a);
        for _ in 0..m_a {
            v.push(read_scalars::<T, R>(r, k * rr)?);
        }
        let mut b = Vec::with_capacity(m_b);
        for _ in 0..m_b {
            b.push(DVector::from_vec(read_scalars::<T, R>(r, k)?));
        }
        let mut l = Vec::with_capacity(m_l);
        for _ in 0..m_l {
            l.push(read_scalars::<T, R>(r, rr)?);
        }
        Ok(ThetaSketch {
            k,
            r: rr,
            emb_id: EmbId {
                spec: EmbeddingSpec { kind, k: ek, n: en, seed },
                q_fingerprint,
            },
            ub,
            v,
            a_coeffs,
            b,
            b_coeffs,
            l,
            l_coeffs,
        })
    }
}

const MAGIC: &[u8; 8] = b"SKMORSK1";
const FORMAT_VERSION: u32 = 1;

fn kind_to_u8(k: EmbeddingKind) -> u8 {
    match k {
        EmbeddingKind::Gaussian => 0,
        EmbeddingKind::Rademacher => 1,
        EmbeddingKind::Psrht => 2,
        EmbeddingKind::Identity => 3,
    }
}

fn kind_from_u8(v: u8) -> Result<EmbeddingKind> {
    Ok(match v {
        0 => EmbeddingKind::Gaussian,
        1 => EmbeddingKind::Rademacher,
        2 => EmbeddingKind::Psrht,
        3 => EmbeddingKind::Identity,
        other => return Err(Error::format(format!("unknown embedding kind tag {other}"))),
    })
}

fn write_u32<W: IoWrite>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_u64<W: IoWrite>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u8<R: IoRead>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u32<R: IoRead>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: IoRead>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn write_scalars<T: Scalar, W: IoWrite>(w: &mut W, vals: &[T]) -> Result<()> {
    for v in vals {
        w.write_all(&v.re().to_le_bytes())?;
        if T::FIELD == FieldTag::Complex {
            w.write_all(&v.im().to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_scalars<T: Scalar, R: IoRead>(r: &mut R, count: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut b)?;
        let re = f64::from_le_bytes(b);
        let im = if T::FIELD == FieldTag::Complex {
            r.read_exact(&mut b)?;
            f64::from_le_bytes(b)
        } else {
            0.0
        };
        out.push(T::try_from_parts(re, im)?);
    }
    Ok(out)
}
