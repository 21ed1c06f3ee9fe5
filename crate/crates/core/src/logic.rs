//! Projection lattice: subspaces with meet and join, the distributivity
//! test, and the Boolean algebra generated by a commuting family.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{group_eigenvalues, hermitian_eigen, orthonormalize, vector, Complex64, ComplexMatrix};
use crate::quantum::{first_incompatible_pair, HermitianObservable};

/// Principal cosines at or above `1 - RANK_TOL` mark shared directions.
pub const RANK_TOL: f64 = 1e-8;
/// Cosines in `[1 - NEAR_TOL, 1 - RANK_TOL)` are reported as near-degenerate.
pub const NEAR_TOL: f64 = 1e-6;
/// Projector equality / ordering tolerance.
pub const LATTICE_TOL: f64 = 1e-8;

type CVector = Vec<Complex64>;

/// Closed subspace of `C^d`, stored as an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    dim_ambient: usize,
    basis: Vec<CVector>,
}

impl Serialize for Subspace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Subspace", 3)?;
        st.serialize_field("dim_ambient", &self.dim_ambient)?;
        st.serialize_field("rank", &self.rank())?;
        st.serialize_field("projector", &self.projector())?;
        st.end()
    }
}

impl Subspace {
    pub fn zero(dim: usize) -> Self {
        Subspace {
            dim_ambient: dim,
            basis: Vec::new(),
        }
    }

    pub fn full(dim: usize) -> Self {
        Subspace {
            dim_ambient: dim,
            basis: (0..dim).map(|k| vector::basis(dim, k)).collect(),
        }
    }

    /// Span of `vectors`; linearly dependent inputs are dropped.
    pub fn from_vectors(dim: usize, vectors: &[CVector]) -> Result<Self> {
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
        }
        Ok(Subspace {
            dim_ambient: dim,
            basis: orthonormalize(vectors, RANK_TOL),
        })
    }

    /// Range of an orthogonal projector (Hermitian and idempotent to `1e-10`).
    pub fn from_projector(p: &ComplexMatrix) -> Result<Self> {
        p.check_finite()?;
        let herm = p.hermitian_deviation();
        if herm > 1e-10 {
            return Err(Error::NotHermitian {
                deviation: herm,
                tol: 1e-10,
            });
        }
        let idem = (&(p * p) - p).norm_max();
        if idem > 1e-10 {
            return Err(Error::InvalidArgument(format!("matrix is not idempotent (defect {idem:e})")));
        }
        let (values, vectors) = hermitian_eigen(p);
        let basis = values
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 0.5)
            .map(|(k, _)| vectors.column(k))
            .collect();
        Ok(Subspace {
            dim_ambient: p.dim(),
            basis,
        })
    }

    /// Line through `v`.
    pub fn ray(v: &[Complex64]) -> Result<Self> {
        Self::from_vectors(v.len(), &[v.to_vec()])
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim_ambient
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CVector] {
        &self.basis
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(self.dim_ambient);
        for v in &self.basis {
            p.add_outer(Complex64::new(1.0, 0.0), v, v);
        }
        p
    }

    /// `‖P_self P_other - P_self‖ ≤ tol`, i.e. `self ⊆ other`.
    pub fn is_below(&self, other: &Subspace, tol: f64) -> Result<bool> {
        same_ambient(self, other)?;
        let p = self.projector();
        Ok((&(&p * &other.projector()) - &p).norm_max() <= tol)
    }

    /// Projector distance `max |P_self - P_other|`.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        same_ambient(self, other)?;
        Ok((&self.projector() - &other.projector()).norm_max())
    }

    /// Orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let mut vectors = self.basis.clone();
        vectors.extend((0..self.dim_ambient).map(|k| vector::basis(self.dim_ambient, k)));
        let all = orthonormalize(&vectors, RANK_TOL);
        Subspace {
            dim_ambient: self.dim_ambient,
            basis: all[self.rank()..].to_vec(),
        }
    }
}

fn same_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.dim_ambient != b.dim_ambient {
        return Err(Error::DimMismatch {
            expected: a.dim_ambient,
            found: b.dim_ambient,
        });
    }
    Ok(())
}

/// Eigenpairs of `G Gᴴ` with `G = Qaᴴ Qb`, as `(cos², coefficients in the
/// basis of a)`, sorted by cosine descending. One pair per basis vector of
/// `a`; directions of `a` orthogonal to `b` come last with `cos² = 0`.
fn principal_pairs(a: &Subspace, b: &Subspace) -> Vec<(f64, CVector)> {
    if a.rank() == 0 {
        return Vec::new();
    }
    let g: Vec<CVector> = a
        .basis
        .iter()
        .map(|u| b.basis.iter().map(|v| vector::inner(u, v)).collect())
        .collect();
    let ggh = ComplexMatrix::from_fn(a.rank(), |i, k| g[i].iter().zip(&g[k]).map(|(x, y)| x * y.conj()).sum());
    let (values, vectors) = hermitian_eigen(&ggh);
    let mut pairs: Vec<(f64, CVector)> = (0..values.len()).map(|k| (values[k], vectors.column(k))).collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs
}

/// Cosines of the principal angles between the two subspaces, descending.
pub fn principal_cosines(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    same_ambient(a, b)?;
    let mut cosines: Vec<f64> = principal_pairs(a, b)
        .into_iter()
        .map(|(c2, _)| c2.max(0.0).sqrt().min(1.0))
        .collect();
    cosines.truncate(a.rank().min(b.rank()));
    Ok(cosines)
}

/// Cosines close to, but below, the sharing threshold.
pub fn near_degenerate_cosines(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    Ok(principal_cosines(a, b)?
        .into_iter()
        .filter(|c| (1.0 - NEAR_TOL..1.0 - RANK_TOL).contains(c))
        .collect())
}

fn combine(a: &Subspace, coeffs: &[Complex64]) -> CVector {
    let mut out = vec![Complex64::new(0.0, 0.0); a.dim_ambient];
    for (c, v) in coeffs.iter().zip(&a.basis) {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

/// `range(Pa) ∩ range(Pb)`: principal vectors of `a` whose cosine with `b`
/// is at least `1 - 1e-8`.
pub fn meet(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    same_ambient(a, b)?;
    let threshold = (1.0 - RANK_TOL).powi(2);
    let shared: Vec<CVector> = principal_pairs(a, b)
        .into_iter()
        .filter(|(c2, _)| *c2 >= threshold)
        .map(|(_, u)| combine(a, &u))
        .collect();
    Subspace::from_vectors(a.dim_ambient, &shared)
}

/// `span(range(Pa) ∪ range(Pb))`. Directions of `b` that `meet` would count
/// as shared with `a` add nothing, so `rank(join) = rank a + rank b - rank(meet)`.
pub fn join(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    same_ambient(a, b)?;
    let threshold = (1.0 - RANK_TOL).powi(2);
    let mut vectors = a.basis.clone();
    for (c2, w) in principal_pairs(b, a) {
        if c2 >= threshold {
            continue;
        }
        let v = combine(b, &w);
        let mut r = v.clone();
        for q in &a.basis {
            let c = vector::inner(q, &v);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= c * qi;
            }
        }
        vectors.push(r);
    }
    // Residuals are mutually orthogonal with norm at least about 1.4e-4.
    let basis = orthonormalize(&vectors, 1e-6);
    Ok(Subspace {
        dim_ambient: a.dim_ambient,
        basis,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributivityReport {
    /// `a ∧ (b ∨ c)`.
    pub lhs: Subspace,
    /// `(a ∧ b) ∨ (a ∧ c)`.
    pub rhs: Subspace,
    pub equal: bool,
    /// `max |P_lhs - P_rhs|`.
    pub difference: f64,
    /// `max |P_rhs P_lhs - P_rhs|`; zero up to rounding in any ortholattice.
    pub ordering_defect: f64,
    /// Some meet or join involved a principal cosine just below the sharing threshold.
    pub near_degenerate: bool,
}

/// Compares `a ∧ (b ∨ c)` with `(a ∧ b) ∨ (a ∧ c)`.
///
/// `rhs ≤ lhs` holds in every ortholattice; a violation beyond `1e-8` is
/// reported as a numerical-integrity failure.
pub fn distributivity_check(a: &Subspace, b: &Subspace, c: &Subspace) -> Result<DistributivityReport> {
    same_ambient(a, b)?;
    same_ambient(a, c)?;
    let bc = join(b, c)?;
    let lhs = meet(a, &bc)?;
    let ab = meet(a, b)?;
    let ac = meet(a, c)?;
    let rhs = join(&ab, &ac)?;
    let near_degenerate = [(b, c), (a, &bc), (a, b), (a, c), (&ab, &ac)]
        .iter()
        .map(|(x, y)| near_degenerate_cosines(x, y).map(|v| !v.is_empty()))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .any(|x| x);
    let (pl, pr) = (lhs.projector(), rhs.projector());
    let difference = (&pl - &pr).norm_max();
    let ordering_defect = (&(&pr * &pl) - &pr).norm_max();
    if ordering_defect > LATTICE_TOL {
        return Err(Error::NumericalIntegrity(format!(
            "(a∧b)∨(a∧c) is not below a∧(b∨c): defect {ordering_defect:e}"
        )));
    }
    Ok(DistributivityReport {
        lhs,
        rhs,
        equal: difference <= LATTICE_TOL,
        difference,
        ordering_defect,
        near_degenerate,
    })
}

/// `a = |0><0|`, `b = |+><+|`, `c = |-><-|` on a qubit.
pub fn canonical_triple() -> (Subspace, Subspace, Subspace) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    (
        Subspace::ray(&vector::basis(2, 0)).expect("unit vector"),
        Subspace::ray(&vector::real(&[h, h])).expect("unit vector"),
        Subspace::ray(&vector::real(&[h, -h])).expect("unit vector"),
    )
}

/// Atoms of the Boolean algebra generated by a commuting family: its joint
/// eigenspaces.
#[derive(Debug, Clone, Serialize)]
pub struct BooleanAlgebra {
    pub atoms: Vec<Subspace>,
}

impl BooleanAlgebra {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// `2^atoms`, when it fits in a `u128`.
    pub fn element_count(&self) -> Option<u128> {
        1u128.checked_shl(self.atoms.len() as u32)
    }

    /// `max |Σ P_atom - I|`. Projectors summing to the identity are
    /// automatically mutually orthogonal.
    pub fn completeness_defect(&self) -> f64 {
        let Some(first) = self.atoms.first() else {
            return 0.0;
        };
        let d = first.dim_ambient;
        let mut sum = ComplexMatrix::zeros(d);
        for atom in &self.atoms {
            for v in &atom.basis {
                sum.add_outer(Complex64::new(1.0, 0.0), v, v);
            }
        }
        (&sum - &ComplexMatrix::identity(d)).norm_max()
    }
}

/// `Vᴴ A V` for a basis `V`, touching only the nonzero entries of each basis
/// vector. Atoms of tensor-product families are spanned by standard basis
/// vectors, which keeps this linear in the ambient dimension per vector.
fn compress(obs: &ComplexMatrix, basis: &[CVector]) -> ComplexMatrix {
    let r = basis.len();
    let d = obs.dim();
    let supports: Vec<Vec<usize>> = basis
        .iter()
        .map(|u| (0..u.len()).filter(|&k| u[k] != Complex64::new(0.0, 0.0)).collect())
        .collect();
    let images: Vec<CVector> = basis
        .iter()
        .zip(&supports)
        .map(|(v, support)| {
            let mut out = vec![Complex64::new(0.0, 0.0); d];
            for &k in support {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += obs[(i, k)] * v[k];
                }
            }
            out
        })
        .collect();
    ComplexMatrix::from_fn(r, |i, j| {
        supports[i]
            .iter()
            .map(|&k| basis[i][k].conj() * images[j][k])
            .sum()
    })
}

/// Joint eigenspaces of a pairwise-commuting family, refined one observable
/// at a time by diagonalizing each observable inside every current atom.
pub fn boolean_subalgebra(observables: &[HermitianObservable], tol: f64) -> Result<BooleanAlgebra> {
    let Some(first) = observables.first() else {
        return Err(Error::InvalidArgument("at least one observable is required".into()));
    };
    let d = first.dim();
    for o in observables {
        if o.dim() != d {
            return Err(Error::DimMismatch {
                expected: d,
                found: o.dim(),
            });
        }
    }
    if let Some((i, j, norm)) = first_incompatible_pair(observables, tol)? {
        return Err(Error::IncompatibleFamily {
            first: i,
            second: j,
            norm,
        });
    }
    let mut atoms: Vec<Vec<CVector>> = vec![(0..d).map(|k| vector::basis(d, k)).collect()];
    for obs in observables {
        let merge = crate::linalg::DEFAULT_MERGE_TOL * obs.matrix().norm_max();
        let mut refined = Vec::with_capacity(atoms.len() * 2);
        for basis in atoms {
            let block = compress(obs.matrix(), &basis);
            let (values, vectors) = hermitian_eigen(&block);
            for group in group_eigenvalues(&values, merge) {
                let sub: Vec<CVector> = group
                    .map(|k| {
                        let coeffs = vectors.column(k);
                        let mut out = vec![Complex64::new(0.0, 0.0); d];
                        for (c, v) in coeffs.iter().zip(&basis) {
                            if c.norm() < 1e-15 {
                                continue;
                            }
                            for (o, x) in out.iter_mut().zip(v) {
                                *o += c * x;
                            }
                        }
                        out
                    })
                    .collect();
                refined.push(sub);
            }
        }
        atoms = refined;
    }
    Ok(BooleanAlgebra {
        atoms: atoms
            .into_iter()
            .map(|basis| Subspace { dim_ambient: d, basis })
            .collect(),
    })
}

/// `σz` on factor `k` of `n` qubits (factor 0 slowest), as a diagonal matrix.
pub fn local_z(n: usize, k: usize) -> ComplexMatrix {
    let d = 1usize << n;
    let diag: Vec<f64> = (0..d)
        .map(|i| if (i >> (n - 1 - k)) & 1 == 0 { 1.0 } else { -1.0 })
        .collect();
    ComplexMatrix::real_diagonal(&diag)
}
