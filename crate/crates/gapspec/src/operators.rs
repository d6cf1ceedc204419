//! Discretized energy operator H_ω = D(∂x) + V(x), its Dirac blocks H± and the
//! linearized operator L.
//!
//! Vectors are component-major: all samples of U1, then U2, U3, U4 (or the two
//! components of a Dirac pair). The 4×4 similarity S then acts as S ⊗ I.

use crate::potential::{hessian_full, reduced_potentials, FieldPair, PotentialParams};
use crate::soliton::SolitonProfile;
use crate::spectral_grid::{apply_real, ChebGrid};
use crate::{Error, Result, C64};
use faer::Mat;
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

/// Signature σ = diag(1, −1, 1, −1).
pub const SIGMA: [f64; 4] = [1.0, -1.0, 1.0, -1.0];

/// Sign of i∂x on each diagonal slot of D: ω − i∂x, ω + i∂x, ω + i∂x, ω − i∂x.
const DX_SIGN: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];

/// The orthogonal similarity S with S⁻¹ = Sᵀ.
pub fn s4() -> [[f64; 4]; 4] {
    let r = FRAC_1_SQRT_2;
    [
        [r, 0.0, r, 0.0],
        [0.0, r, 0.0, r],
        [0.0, r, 0.0, -r],
        [r, 0.0, -r, 0.0],
    ]
}

/// Which first-derivative matrix enters the operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Derivative {
    /// Plain collocation matrix.
    Collocation,
    /// Quadrature-skew collocation matrix, see [`ChebGrid::skew_diff`].
    #[default]
    Skew,
}

fn derivative(grid: &ChebGrid, kind: Derivative) -> Mat<f64> {
    match kind {
        Derivative::Collocation => grid.diff().clone(),
        Derivative::Skew => grid.skew_diff(),
    }
}

fn check(grid: &ChebGrid, profile: &SolitonProfile) -> Result<()> {
    if profile.len() != grid.len() {
        return Err(Error::Length {
            expected: grid.len(),
            got: profile.len(),
        });
    }
    Ok(())
}

/// Symbol of D at wavenumber k (∂x → ik).
pub fn dirac_symbol(omega: f64, k: f64) -> [[C64; 4]; 4] {
    let mut m = [[C64::new(0.0, 0.0); 4]; 4];
    for a in 0..4 {
        // ∓i∂x → ∓i(ik) = ±k
        m[a][a] = C64::new(omega - DX_SIGN[a] * k, 0.0);
    }
    for (a, b) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
        m[a][b] = C64::new(-1.0, 0.0);
    }
    m
}

pub fn assemble_full(
    grid: &ChebGrid,
    profile: &SolitonProfile,
    p: &PotentialParams,
    omega: f64,
    kind: Derivative,
) -> Result<Mat<C64>> {
    check(grid, profile)?;
    let n = grid.len();
    let d = derivative(grid, kind);
    let v: Vec<[[C64; 4]; 4]> = profile
        .u0
        .iter()
        .zip(&profile.v0)
        .map(|(&u, &w)| hessian_full(FieldPair::new(u, w), p))
        .collect();
    let mut h = Mat::<C64>::zeros(4 * n, 4 * n);
    for a in 0..4 {
        for i in 0..n {
            for j in 0..n {
                h[(a * n + i, a * n + j)] = C64::new(0.0, DX_SIGN[a] * d[(i, j)]);
            }
            h[(a * n + i, a * n + i)] += omega;
        }
    }
    for (a, b) in [(0, 2), (1, 3), (2, 0), (3, 1)] {
        for i in 0..n {
            h[(a * n + i, b * n + i)] = C64::new(-1.0, 0.0);
        }
    }
    for (i, vi) in v.iter().enumerate() {
        for a in 0..4 {
            for b in 0..4 {
                h[(a * n + i, b * n + i)] += vi[a][b];
            }
        }
    }
    Ok(h)
}

/// The Dirac operators (H+, H−).
pub fn assemble_blocks(
    grid: &ChebGrid,
    profile: &SolitonProfile,
    p: &PotentialParams,
    omega: f64,
    kind: Derivative,
) -> Result<(Mat<C64>, Mat<C64>)> {
    check(grid, profile)?;
    let n = grid.len();
    let d = derivative(grid, kind);
    let vs: Vec<_> = profile
        .u0
        .iter()
        .map(|&u| reduced_potentials(u, p))
        .collect();
    let build = |sign: f64| {
        let mut h = Mat::<C64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = C64::new(0.0, -d[(i, j)]);
                h[(n + i, n + j)] = C64::new(0.0, d[(i, j)]);
            }
            let v = if sign > 0.0 { vs[i].0 } else { vs[i].1 };
            h[(i, i)] += v[0][0] + omega;
            h[(n + i, n + i)] += v[1][1] + omega;
            h[(i, n + i)] = v[0][1] - sign;
            h[(n + i, i)] = v[1][0] - sign;
        }
        h
    };
    Ok((build(1.0), build(-1.0)))
}

fn check_square(m: &Mat<C64>, dim: usize) -> Result<()> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::Length {
            expected: dim,
            got: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

/// L = −i·blockdiag(σ3, σ3)·[[0, H−], [H+, 0]].
pub fn assemble_l(hplus: &Mat<C64>, hminus: &Mat<C64>) -> Result<Mat<C64>> {
    let m = hplus.nrows();
    if !m.is_multiple_of(2) {
        return Err(Error::Invalid(
            "Dirac blocks must have even dimension".into(),
        ));
    }
    check_square(hplus, m)?;
    check_square(hminus, m)?;
    let n = m / 2;
    let s3 = |i: usize| if i < n { 1.0 } else { -1.0 };
    let mi = C64::new(0.0, -1.0);
    let mut l = Mat::<C64>::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            l[(i, m + j)] = mi * s3(i) * hminus[(i, j)];
            l[(m + i, j)] = mi * s3(i) * hplus[(i, j)];
        }
    }
    Ok(l)
}

/// The direct linearized operator −iσH_ω in the original variables.
pub fn linearized_full(h_full: &Mat<C64>) -> Result<Mat<C64>> {
    let m = h_full.nrows();
    if !m.is_multiple_of(4) {
        return Err(Error::Invalid(
            "energy operator must have dimension 4(N+1)".into(),
        ));
    }
    check_square(h_full, m)?;
    let n = m / 4;
    Ok(Mat::<C64>::from_fn(m, m, |i, j| {
        C64::new(0.0, -SIGMA[i / n]) * h_full[(i, j)]
    }))
}

fn sigma3_left(m: &Mat<C64>) -> Mat<C64> {
    let n = m.nrows() / 2;
    Mat::<C64>::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i < n {
            m[(i, j)]
        } else {
            -m[(i, j)]
        }
    })
}

/// (M+, M−) = (σ3H−σ3H+, σ3H+σ3H−), whose eigenvalues are γ = −λ².
pub fn product_blocks(hplus: &Mat<C64>, hminus: &Mat<C64>) -> Result<(Mat<C64>, Mat<C64>)> {
    let m = hplus.nrows();
    check_square(hplus, m)?;
    check_square(hminus, m)?;
    let a = sigma3_left(hminus);
    let b = sigma3_left(hplus);
    Ok((&a * &b, &b * &a))
}

/// Sᵀ H S for a component-major 4-block matrix.
pub fn conjugate_by_s(h: &Mat<C64>) -> Mat<C64> {
    let n = h.nrows() / 4;
    let s = s4();
    Mat::<C64>::from_fn(4 * n, 4 * n, |r, c| {
        let (a, i) = (r / n, r % n);
        let (b, j) = (c / n, c % n);
        let mut acc = C64::new(0.0, 0.0);
        for x in 0..4 {
            if s[x][a] == 0.0 {
                continue;
            }
            for y in 0..4 {
                if s[y][b] != 0.0 {
                    acc += h[(x * n + i, y * n + j)] * (s[x][a] * s[y][b]);
                }
            }
        }
        acc
    })
}

/// ‖SᵀHS − blockdiag(H+, H−)‖_max.
pub fn blockdiag_error(h_full: &Mat<C64>, hplus: &Mat<C64>, hminus: &Mat<C64>) -> f64 {
    let c = conjugate_by_s(h_full);
    let m = hplus.nrows();
    let mut err: f64 = 0.0;
    for i in 0..2 * m {
        for j in 0..2 * m {
            let want = match (i < m, j < m) {
                (true, true) => hplus[(i, j)],
                (false, false) => hminus[(i - m, j - m)],
                _ => C64::new(0.0, 0.0),
            };
            err = err.max((c[(i, j)] - want).norm());
        }
    }
    err
}

/// W^{1/2} H W^{−1/2} with W the quadrature weights repeated per component.
///
/// With the skew derivative this is Hermitian up to rounding, which lets the
/// H± spectra be computed with a Hermitian solver.
pub fn weighted_similarity(h: &Mat<C64>, weights: &[f64]) -> Mat<C64> {
    let n = weights.len();
    let sw: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    Mat::<C64>::from_fn(h.nrows(), h.ncols(), |i, j| {
        h[(i, j)] * (sw[i % n] / sw[j % n])
    })
}

/// Kernel vectors of the energy operator and of the Dirac blocks.
#[derive(Debug, Clone)]
pub struct KernelVectors {
    /// σu0 = (u0, −ū0, v0, −v̄0) from the gauge symmetry.
    pub gauge_full: Vec<C64>,
    /// u0′ = (u0′, ū0′, v0′, v̄0′) from translation.
    pub translation_full: Vec<C64>,
    /// (u0′, ū0′), annihilated by H+.
    pub translation_pair: Vec<C64>,
    /// σ3(u0, ū0) = (u0, −ū0), annihilated by H−.
    pub gauge_pair: Vec<C64>,
}

pub fn kernel_vectors(grid: &ChebGrid, profile: &SolitonProfile) -> Result<KernelVectors> {
    check(grid, profile)?;
    let u = &profile.u0;
    let v = &profile.v0;
    let ub: Vec<C64> = u.iter().map(|z| z.conj()).collect();
    let vb: Vec<C64> = v.iter().map(|z| z.conj()).collect();
    let d = |f: &[C64]| apply_real(grid.diff(), f);
    let neg = |f: &[C64]| f.iter().map(|z| -z).collect::<Vec<_>>();
    let cat = |parts: &[&[C64]]| parts.concat();
    let (du, dub, dv, dvb) = (d(u), d(&ub), d(v), d(&vb));
    Ok(KernelVectors {
        gauge_full: cat(&[u, &neg(&ub), v, &neg(&vb)]),
        translation_full: cat(&[&du, &dub, &dv, &dvb]),
        translation_pair: cat(&[&du, &dub]),
        gauge_pair: cat(&[u, &neg(&ub)]),
    })
}

pub fn mat_vec(m: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
        .collect()
}

pub fn max_abs(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Quadrature values of the two σ-orthogonality integrals
/// (u0, U) = ∫(ū0U1 + u0U2 + v̄0U3 + v0U4) and (u0′, σU) = ∫(ū0′U1 − u0′U2 + v̄0′U3 − v0′U4).
pub fn constraint_residuals(
    grid: &ChebGrid,
    profile: &SolitonProfile,
    big_u: &[C64],
) -> Result<(C64, C64)> {
    check(grid, profile)?;
    let n = grid.len();
    if big_u.len() != 4 * n {
        return Err(Error::Length {
            expected: 4 * n,
            got: big_u.len(),
        });
    }
    let k = kernel_vectors(grid, profile)?;
    // u0 vector (u0, ū0, v0, v̄0) is σ applied to the gauge vector
    let mut c1 = vec![C64::new(0.0, 0.0); n];
    let mut c2 = vec![C64::new(0.0, 0.0); n];
    for a in 0..4 {
        for j in 0..n {
            let u0a = k.gauge_full[a * n + j] * SIGMA[a];
            c1[j] += u0a.conj() * big_u[a * n + j];
            c2[j] += k.translation_full[a * n + j].conj() * big_u[a * n + j] * SIGMA[a];
        }
    }
    Ok((grid.integrate_complex(&c1), grid.integrate_complex(&c2)))
}

/// Reduced constraints (u0, V1) and (u0′, σ3V2) for Dirac-pair vectors.
pub fn constraint_residuals_reduced(
    grid: &ChebGrid,
    profile: &SolitonProfile,
    v1: &[C64],
    v2: &[C64],
) -> Result<(C64, C64)> {
    check(grid, profile)?;
    let n = grid.len();
    for v in [v1, v2] {
        if v.len() != 2 * n {
            return Err(Error::Length {
                expected: 2 * n,
                got: v.len(),
            });
        }
    }
    let k = kernel_vectors(grid, profile)?;
    let c1: Vec<C64> = (0..n)
        .map(|j| profile.u0[j].conj() * v1[j] + profile.u0[j] * v1[n + j])
        .collect();
    let c2: Vec<C64> = (0..n)
        .map(|j| {
            k.translation_pair[j].conj() * v2[j] - k.translation_pair[n + j].conj() * v2[n + j]
        })
        .collect();
    Ok((grid.integrate_complex(&c1), grid.integrate_complex(&c2)))
}

/// All operators for one soliton on one grid.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub omega: f64,
    pub h_full: Mat<C64>,
    pub hplus: Mat<C64>,
    pub hminus: Mat<C64>,
    pub lmat: Mat<C64>,
}

impl OperatorSet {
    pub fn assemble(
        grid: &ChebGrid,
        profile: &SolitonProfile,
        p: &PotentialParams,
        kind: Derivative,
    ) -> Result<Self> {
        let omega = profile.omega;
        let h_full = assemble_full(grid, profile, p, omega, kind)?;
        let (hplus, hminus) = assemble_blocks(grid, profile, p, omega, kind)?;
        let lmat = assemble_l(&hplus, &hminus)?;
        Ok(Self {
            omega,
            h_full,
            hplus,
            hminus,
            lmat,
        })
    }
}

#[derive(Debug, Serialize)]
struct DumpSidecar<'a> {
    rows: usize,
    cols: usize,
    dtype: &'a str,
    layout: &'a str,
    endianness: &'a str,
    data: String,
}

/// Writes `stem.bin` (row-major, little-endian f64 pairs re, im) and `stem.json`.
pub fn dump_matrix(m: &Mat<C64>, stem: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(m.nrows() * m.ncols() * 16);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            bytes.extend_from_slice(&m[(i, j)].re.to_le_bytes());
            bytes.extend_from_slice(&m[(i, j)].im.to_le_bytes());
        }
    }
    let bin = stem.with_extension("bin");
    std::fs::write(&bin, bytes)?;
    let side = DumpSidecar {
        rows: m.nrows(),
        cols: m.ncols(),
        dtype: "complex128",
        layout: "row-major",
        endianness: "little",
        data: bin
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    std::fs::write(
        stem.with_extension("json"),
        serde_json::to_string_pretty(&side)?,
    )?;
    Ok(())
}
