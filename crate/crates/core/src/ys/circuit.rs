//! Linear-optical network of the three-party interferometer.
//!
//! Mode order (fixed): A-upper, A-lower, B-upper, B-lower, C-upper, C-lower.
//! Each source emits one photon into a 50:50 beam splitter whose outputs
//! reach two neighbouring parties in a ring:
//!
//! | source | input mode | transmitted | reflected |
//! |--------|------------|-------------|-----------|
//! | 1      | C-lower    | C-lower     | A-upper   |
//! | 2      | A-lower    | A-lower     | B-upper   |
//! | 3      | B-lower    | B-lower     | C-upper   |
//!
//! Each party applies `e^{i phi}` to its upper arm and then mixes its two
//! arms on a second beam splitter whose outputs are the left (from upper) and
//! right (from lower) detectors; the output modes keep the input slots, so
//! slot "upper" is the left detector and "lower" the right one.
//!
//! All beam splitters are symmetric, `a_t -> (a_t + i a_r) / sqrt 2`.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use nalgebra::{DMatrix, Matrix6};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub const MODES: usize = 6;
/// Input modes of the three source photons.
pub const SOURCE_MODES: [usize; 3] = [5, 1, 3];
/// Unitarity tolerance for [`ModeUnitary`].
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum YsError {
    #[error("phase {0} is not finite")]
    NonFinitePhase(f64),
    #[error("a detection event must contain exactly 3 photons, got {0}")]
    PhotonCount(usize),
    #[error("malformed detection pattern `{0}`")]
    BadPattern(String),
    #[error("postselected events carry no probability mass")]
    ZeroPostselectionMass,
}

/// Phases imprinted by the three parties on their upper arms, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSettings {
    pub phi_a: f64,
    pub phi_b: f64,
    pub phi_c: f64,
}

impl PhaseSettings {
    pub fn new(phi_a: f64, phi_b: f64, phi_c: f64) -> Result<Self, YsError> {
        for p in [phi_a, phi_b, phi_c] {
            if !p.is_finite() {
                return Err(YsError::NonFinitePhase(p));
            }
        }
        Ok(Self {
            phi_a,
            phi_b,
            phi_c,
        })
    }

    pub fn zero() -> Self {
        Self {
            phi_a: 0.0,
            phi_b: 0.0,
            phi_c: 0.0,
        }
    }

    /// Representative with every phase in `[0, 2 pi)`.
    pub fn canonical(&self) -> Self {
        Self {
            phi_a: self.phi_a.rem_euclid(TAU),
            phi_b: self.phi_b.rem_euclid(TAU),
            phi_c: self.phi_c.rem_euclid(TAU),
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.phi_a, self.phi_b, self.phi_c]
    }

    pub fn sum(&self) -> f64 {
        self.phi_a + self.phi_b + self.phi_c
    }
}

/// Single-photon transfer matrix: column `j` holds the output amplitudes of
/// a photon entering mode `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeUnitary(Matrix6<Complex64>);

impl ModeUnitary {
    pub fn matrix(&self) -> &Matrix6<Complex64> {
        &self.0
    }

    /// Largest entry of `|U U^dagger - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.0 * self.0.adjoint() - Matrix6::identity();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= UNITARITY_TOL
    }

    /// Largest entry-wise distance to another network.
    pub fn distance(&self, other: &ModeUnitary) -> f64 {
        (self.0 - other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Symmetric 50:50 beam splitter between modes `t` and `r`.
pub fn beam_splitter(t: usize, r: usize) -> Matrix6<Complex64> {
    let mut m = Matrix6::identity();
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let is = Complex64::new(0.0, FRAC_1_SQRT_2);
    m[(t, t)] = s;
    m[(r, r)] = s;
    m[(r, t)] = is;
    m[(t, r)] = is;
    m
}

pub fn phase_shifter(mode: usize, phi: f64) -> Matrix6<Complex64> {
    let mut m = Matrix6::identity();
    m[(mode, mode)] = Complex64::from_polar(1.0, phi);
    m
}

/// Source splitters, phases, then the parties' splitters.
pub fn build_circuit(p: &PhaseSettings) -> ModeUnitary {
    let sources = beam_splitter(1, 2) * beam_splitter(3, 4) * beam_splitter(5, 0);
    let phases = phase_shifter(0, p.phi_a) * phase_shifter(2, p.phi_b) * phase_shifter(4, p.phi_c);
    let parties = beam_splitter(0, 1) * beam_splitter(2, 3) * beam_splitter(4, 5);
    ModeUnitary(parties * phases * sources)
}

/// Permanent by Ryser's formula with Gray-code subset updates.
pub fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "permanent needs a square matrix");
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray = 0usize;
    for k in 1..(1usize << n) {
        let next = k ^ (k >> 1);
        let col = (gray ^ next).trailing_zeros() as usize;
        let sign = if next & (1 << col) != 0 { 1.0 } else { -1.0 };
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += m[(i, col)] * sign;
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        if (n - next.count_ones() as usize).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}
