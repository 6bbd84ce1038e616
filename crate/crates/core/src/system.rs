//! Block-structured passive linear memory systems.
//!
//! The modes are ordered `[a0, a1 (n1 buffer modes), a2 (n2 memory modes)]`.
//! The Hamiltonian matrix is `Omega(u) = F + G u` with
//!
//! ```text
//!     | F00   F01  0 |        | 0  0     0   |
//! F = | F01^  F11  0 |    G = | 0  G11   G12 |
//!     | 0     0    0 |        | 0  G12^  G22 |
//! ```
//!
//! and only `a0` couples to the field, `C = [c, 0, ..., 0]`. Setting `u = 0`
//! isolates the memory block from everything else.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, unitarity_defect, I, ZERO};

/// Absolute tolerance on `max |M - M^dag|` for hand-specified blocks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Absolute tolerance on `max |U^dag U - I|`.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeDimensions {
    pub n1: usize,
    pub n2: usize,
}

impl ModeDimensions {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::Dimension(format!("n1 = {n1}, n2 = {n2}; both must be >= 1")));
        }
        Ok(Self { n1, n2 })
    }

    /// `n = 1 + n1 + n2`.
    pub fn total(&self) -> usize {
        1 + self.n1 + self.n2
    }

    /// Index range of the memory modes.
    pub fn memory(&self) -> std::ops::Range<usize> {
        1 + self.n1..self.total()
    }

    /// Index range of the buffer modes (including the port mode `a0`).
    pub fn buffer(&self) -> std::ops::Range<usize> {
        0..1 + self.n1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemorySystem {
    pub dims: ModeDimensions,
    pub f00: f64,
    pub f01: DVector<C64>,
    pub f11: DMatrix<C64>,
    pub g11: DMatrix<C64>,
    pub g12: DMatrix<C64>,
    pub g22: DMatrix<C64>,
    pub c: C64,
}

/// `A(u) = a0 + a1 u`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftPair {
    pub a0: DMatrix<C64>,
    pub a1: DMatrix<C64>,
}

impl DriftPair {
    pub fn at(&self, u: f64) -> DMatrix<C64> {
        &self.a0 + &self.a1 * C64::from(u)
    }

    pub fn dim(&self) -> usize {
        self.a0.nrows()
    }
}

impl MemorySystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dims: ModeDimensions,
        f00: f64,
        f01: DVector<C64>,
        f11: DMatrix<C64>,
        g11: DMatrix<C64>,
        g12: DMatrix<C64>,
        g22: DMatrix<C64>,
        c: C64,
    ) -> Result<Self> {
        let sys = Self { dims, f00, f01, f11, g11, g12, g22, c };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        let ModeDimensions { n1, n2 } = ModeDimensions::new(self.dims.n1, self.dims.n2)?;
        let shape = |name: &str, m: &DMatrix<C64>, r: usize, c: usize| {
            if m.shape() != (r, c) {
                Err(Error::Dimension(format!("{name} is {:?}, expected ({r}, {c})", m.shape())))
            } else {
                Ok(())
            }
        };
        if self.f01.len() != n1 {
            return Err(Error::Dimension(format!("F01 has length {}, expected {n1}", self.f01.len())));
        }
        shape("F11", &self.f11, n1, n1)?;
        shape("G11", &self.g11, n1, n1)?;
        shape("G12", &self.g12, n1, n2)?;
        shape("G22", &self.g22, n2, n2)?;
        if !self.f00.is_finite() {
            return Err(Error::Parameter("F00 must be finite".into()));
        }
        for (block, m) in [("F11", &self.f11), ("G11", &self.g11), ("G22", &self.g22)] {
            let defect = hermitian_defect(m);
            if !(defect <= HERMITIAN_TOL) {
                return Err(Error::NotHermitian { block, defect });
            }
        }
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        if !(self.f01.iter().all(finite)
            && self.g12.iter().all(finite)
            && finite(&self.c))
        {
            return Err(Error::Parameter("system entries must be finite".into()));
        }
        if self.c.norm() == 0.0 {
            return Err(Error::ZeroCoupling);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    /// The full `F` and `G` matrices.
    pub fn omega_parts(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        let n = self.dim();
        let n1 = self.dims.n1;
        let mut f = DMatrix::<C64>::zeros(n, n);
        let mut g = DMatrix::<C64>::zeros(n, n);
        f[(0, 0)] = C64::from(self.f00);
        for j in 0..n1 {
            f[(0, 1 + j)] = self.f01[j];
            f[(1 + j, 0)] = self.f01[j].conj();
        }
        f.view_mut((1, 1), (n1, n1)).copy_from(&self.f11);
        g.view_mut((1, 1), (n1, n1)).copy_from(&self.g11);
        g.view_mut((1, 1 + n1), (n1, self.dims.n2)).copy_from(&self.g12);
        g.view_mut((1 + n1, 1), (self.dims.n2, n1)).copy_from(&self.g12.adjoint());
        g.view_mut((1 + n1, 1 + n1), (self.dims.n2, self.dims.n2)).copy_from(&self.g22);
        (f, g)
    }

    /// `C = [c, 0, ..., 0]` as a row vector.
    pub fn coupling_row(&self) -> DMatrix<C64> {
        let mut row = DMatrix::<C64>::zeros(1, self.dim());
        row[(0, 0)] = self.c;
        row
    }

    /// Affine parts of the Heisenberg drift `A(u) = -i Omega(u) - C^dag C / 2`.
    pub fn heisenberg_drift_pair(&self) -> DriftPair {
        let (f, g) = self.omega_parts();
        let mut a0 = f * (-I);
        a0[(0, 0)] -= C64::from(0.5 * self.c.norm_sqr());
        DriftPair { a0, a1: g * (-I) }
    }
}

/// `Omega = F + G u`.
pub fn assemble_omega(sys: &MemorySystem, u: f64) -> Result<DMatrix<C64>> {
    sys.validate()?;
    let (f, g) = sys.omega_parts();
    Ok(f + g * C64::from(u))
}

/// `A = -i Omega(u) - C^dag C / 2`.
pub fn assemble_heisenberg_drift(sys: &MemorySystem, u: f64) -> Result<DMatrix<C64>> {
    sys.validate()?;
    Ok(sys.heisenberg_drift_pair().at(u))
}

/// Change of mode basis `a' = U^dag a`: returns `(U^dag A U, C U)`.
pub fn apply_mode_transformation(
    a: &DMatrix<C64>,
    c: &DMatrix<C64>,
    u: &DMatrix<C64>,
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let n = a.nrows();
    if !a.is_square() || u.shape() != (n, n) || c.shape() != (1, n) {
        return Err(Error::Dimension(format!(
            "A {:?}, C {:?}, U {:?} are incompatible",
            a.shape(),
            c.shape(),
            u.shape()
        )));
    }
    let defect = unitarity_defect(u);
    if !(defect <= UNITARY_TOL) {
        return Err(Error::NotUnitary { defect });
    }
    Ok((u.adjoint() * a * u, c * u))
}

/// JSON form: complex numbers as `[re, im]`, matrices as arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemJson {
    pub n1: usize,
    pub n2: usize,
    #[serde(rename = "F00")]
    pub f00: f64,
    #[serde(rename = "F01")]
    pub f01: Vec<[f64; 2]>,
    #[serde(rename = "F11")]
    pub f11: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "G11")]
    pub g11: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "G12")]
    pub g12: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "G22")]
    pub g22: Vec<Vec<[f64; 2]>>,
    pub c: [f64; 2],
}

fn to_c(p: &[f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn from_c(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

fn matrix_from_rows(name: &str, rows: &[Vec<[f64; 2]>], r: usize, c: usize) -> Result<DMatrix<C64>> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Dimension(format!("{name} must be {r}x{c}")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| to_c(&rows[i][j])))
}

fn matrix_to_rows(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| from_c(&m[(i, j)])).collect()).collect()
}

impl TryFrom<&SystemJson> for MemorySystem {
    type Error = Error;

    fn try_from(j: &SystemJson) -> Result<Self> {
        let dims = ModeDimensions::new(j.n1, j.n2)?;
        if j.f01.len() != j.n1 {
            return Err(Error::Dimension(format!("F01 must have length {}", j.n1)));
        }
        MemorySystem::new(
            dims,
            j.f00,
            DVector::from_iterator(j.n1, j.f01.iter().map(to_c)),
            matrix_from_rows("F11", &j.f11, j.n1, j.n1)?,
            matrix_from_rows("G11", &j.g11, j.n1, j.n1)?,
            matrix_from_rows("G12", &j.g12, j.n1, j.n2)?,
            matrix_from_rows("G22", &j.g22, j.n2, j.n2)?,
            to_c(&j.c),
        )
    }
}

impl From<&MemorySystem> for SystemJson {
    fn from(s: &MemorySystem) -> Self {
        Self {
            n1: s.dims.n1,
            n2: s.dims.n2,
            f00: s.f00,
            f01: s.f01.iter().map(from_c).collect(),
            f11: matrix_to_rows(&s.f11),
            g11: matrix_to_rows(&s.g11),
            g12: matrix_to_rows(&s.g12),
            g22: matrix_to_rows(&s.g22),
            c: from_c(&s.c),
        }
    }
}

impl MemorySystem {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: SystemJson = serde_json::from_str(s)?;
        MemorySystem::try_from(&j)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&SystemJson::from(self)).expect("system JSON is serializable")
    }
}

/// Zero matrix helper for tests and presets.
pub(crate) fn zeros(r: usize, c: usize) -> DMatrix<C64> {
    DMatrix::from_element(r, c, ZERO)
}
