//! Dense eigenvalues and their classification into kernel, continuous-band
//! approximants, and isolated eigenvalues (pairs and quartets).
//!
//! Spectra of H± come from a Hermitian solver applied to W^{1/2}H±W^{−1/2}.
//! Stability eigenvalues λ come from the product matrix σ3H−σ3H+ (γ = −λ²);
//! the direct 4(N+1) eigensolve of L is kept as a cross-check.

use crate::operators::{
    assemble_blocks, assemble_l, product_blocks, weighted_similarity, Derivative,
};
use crate::soliton::Model;
use crate::spectral_grid::{halfwidth_auto, stretch_auto, ChebGrid};
use crate::{Error, Result, C64};
use faer::{Mat, Par, Side};
use serde::Serialize;
use std::io::Write;

fn sequential() {
    // callers parallelize across matrices; keep each solve on one thread
    faer::set_global_parallelism(Par::Seq);
}

/// All eigenvalues of a general complex matrix (Schur-based, via faer).
pub fn eig_general(m: &Mat<C64>) -> Result<Vec<C64>> {
    check_finite(m)?;
    sequential();
    m.eigenvalues()
        .map_err(|e| Error::Eigen(format!("{e:?} on a {}×{} matrix", m.nrows(), m.ncols())))
}

/// Eigenvalues with right eigenvectors as columns.
pub fn eig_general_vectors(m: &Mat<C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    check_finite(m)?;
    sequential();
    let e = m
        .eigen()
        .map_err(|e| Error::Eigen(format!("{e:?} on a {}×{} matrix", m.nrows(), m.ncols())))?;
    let vals = e.S().column_vector().iter().copied().collect();
    Ok((vals, e.U().to_owned()))
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn eig_hermitian(m: &Mat<C64>) -> Result<Vec<f64>> {
    check_finite(m)?;
    sequential();
    m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| {
        Error::Eigen(format!(
            "{e:?} on a {}×{} Hermitian matrix",
            m.nrows(),
            m.ncols()
        ))
    })
}

fn check_finite(m: &Mat<C64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Invalid(format!(
            "matrix is {}×{}, not square",
            m.nrows(),
            m.ncols()
        )));
    }
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if !m[(i, j)].is_finite() {
                return Err(Error::Invalid(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// λ = ±√(−γ) for every γ.
pub fn lambdas_from_gammas(gammas: &[C64]) -> Vec<C64> {
    gammas
        .iter()
        .flat_map(|g| {
            let l = (-g).sqrt();
            [l, -l]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorTag {
    L,
    Hplus,
    Hminus,
    Mplus,
}

impl OperatorTag {
    pub fn name(&self) -> &'static str {
        match self {
            OperatorTag::L => "L",
            OperatorTag::Hplus => "Hplus",
            OperatorTag::Hminus => "Hminus",
            OperatorTag::Mplus => "Mplus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    ImaginaryPair,
    RealPair,
    ComplexQuartet,
    RealIsolated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Isolated {
    /// Representative with Re ≥ 0 and Im ≥ 0 (for L) or the eigenvalue itself (for H±).
    pub value: C64,
    pub members: Vec<C64>,
    pub multiplicity: usize,
    pub kind: Kind,
}

/// Classification thresholds. `band` applies to H±, `band_l` to L; the match
/// tolerances drive [`filter_spurious`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub kernel: f64,
    pub kernel_l: f64,
    pub re: f64,
    pub band: f64,
    pub band_l: f64,
    pub sym: f64,
    pub match_abs: f64,
    pub match_rel: f64,
    pub window_rel: f64,
    pub overlap_rel: f64,
    pub quartet_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kernel: 1e-6,
            // the generalized kernel of L is a Jordan block, so its discrete
            // eigenvalues split like the square root of the rounding level
            kernel_l: 1e-4,
            re: 1e-6,
            band: 1e-3,
            band_l: 1e-4,
            sym: 1e-6,
            match_abs: 1e-4,
            match_rel: 0.05,
            window_rel: 0.5,
            overlap_rel: 0.01,
            quartet_floor: 2e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub omega: f64,
    pub operator: OperatorTag,
    pub raw: Vec<C64>,
    pub kernel: Vec<C64>,
    pub band: Vec<C64>,
    pub isolated: Vec<Isolated>,
    pub filtered_out: Vec<C64>,
    /// Eigenvalues off the band whose symmetry partners were not found.
    pub unmatched: Vec<C64>,
}

impl Spectrum {
    pub fn count(&self, kind: Kind) -> usize {
        self.isolated.iter().filter(|i| i.kind == kind).count()
    }

    /// (value, class) rows covering every raw eigenvalue.
    pub fn labelled(&self) -> Vec<(C64, &'static str)> {
        let mut rows: Vec<(C64, &'static str)> = Vec::with_capacity(self.raw.len());
        rows.extend(self.kernel.iter().map(|&z| (z, "kernel")));
        rows.extend(self.band.iter().map(|&z| (z, "band")));
        for iso in &self.isolated {
            let label = match iso.kind {
                Kind::ImaginaryPair => "imaginary_pair",
                Kind::RealPair => "real_pair",
                Kind::ComplexQuartet => "complex_quartet",
                Kind::RealIsolated => "isolated",
            };
            rows.extend(iso.members.iter().map(|&z| (z, label)));
        }
        rows.extend(self.filtered_out.iter().map(|&z| (z, "filtered")));
        rows.extend(self.unmatched.iter().map(|&z| (z, "unmatched")));
        rows
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re,im,class")?;
        for (z, c) in self.labelled() {
            writeln!(w, "{:.15e},{:.15e},{}", z.re, z.im, c)?;
        }
        Ok(())
    }
}

/// Sorts eigenvalues into kernel, band and isolated groups.
///
/// For L (or Mplus, whose γ are first converted to ±λ) the band is the pair of
/// imaginary half-lines |Im λ| ≥ 1 − |ω|. For H± the band is the complement of
/// the gap (ω − 1, ω + 1).
pub fn classify(raw: &[C64], omega: f64, operator: OperatorTag, tol: &Tolerances) -> Spectrum {
    let values = if operator == OperatorTag::Mplus {
        lambdas_from_gammas(raw)
    } else {
        raw.to_vec()
    };
    let mut s = Spectrum {
        omega,
        operator,
        raw: values.clone(),
        kernel: vec![],
        band: vec![],
        isolated: vec![],
        filtered_out: vec![],
        unmatched: vec![],
    };
    match operator {
        OperatorTag::Hplus | OperatorTag::Hminus => {
            for z in values {
                if z.norm() < tol.kernel {
                    s.kernel.push(z);
                } else if z.re <= omega - 1.0 + tol.band || z.re >= omega + 1.0 - tol.band {
                    s.band.push(z);
                } else if z.im.abs() > tol.re {
                    s.unmatched.push(z);
                } else {
                    s.isolated.push(Isolated {
                        value: z,
                        members: vec![z],
                        multiplicity: 1,
                        kind: Kind::RealIsolated,
                    });
                }
            }
        }
        OperatorTag::L | OperatorTag::Mplus => {
            let s_operator = OperatorTag::L;
            s.operator = s_operator;
            let edge = 1.0 - omega.abs();
            let mut rest = vec![];
            for z in values {
                if z.norm() < tol.kernel_l {
                    s.kernel.push(z);
                } else if z.re.abs() < tol.re && z.im.abs() >= edge - tol.band_l {
                    s.band.push(z);
                } else {
                    rest.push(z);
                }
            }
            group_symmetric(rest, tol, &mut s);
        }
    }
    s
}

/// Greedy partner matching under λ → −λ and λ → λ̄, largest |Re| first.
fn group_symmetric(mut rest: Vec<C64>, tol: &Tolerances, s: &mut Spectrum) {
    rest.sort_by(|a, b| {
        b.re.abs()
            .total_cmp(&a.re.abs())
            .then(b.im.abs().total_cmp(&a.im.abs()))
    });
    let mut used = vec![false; rest.len()];
    for i in 0..rest.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = rest[i];
        let (kind, targets) = if z.re.abs() < tol.re {
            (Kind::ImaginaryPair, vec![-z])
        } else if z.im.abs() < tol.re {
            (Kind::RealPair, vec![-z])
        } else {
            (Kind::ComplexQuartet, vec![-z, z.conj(), -z.conj()])
        };
        let mut members = vec![z];
        let mut picked = vec![];
        for t in targets {
            let best = (0..rest.len())
                .filter(|&j| !used[j] && !picked.contains(&j))
                .map(|j| (j, (rest[j] - t).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((j, d)) if d < tol.sym => picked.push(j),
                _ => {
                    picked.clear();
                    break;
                }
            }
        }
        if picked.is_empty() {
            s.unmatched.push(z);
            continue;
        }
        for j in picked {
            used[j] = true;
            members.push(rest[j]);
        }
        let value = C64::new(z.re.abs(), z.im.abs());
        s.isolated.push(Isolated {
            value,
            members,
            multiplicity: 1,
            kind,
        });
    }
    s.isolated.sort_by(|a, b| {
        b.value
            .re
            .total_cmp(&a.value.re)
            .then(a.value.im.total_cmp(&b.value.im))
    });
}

/// Distance of an isolated eigenvalue from the continuous spectrum.
fn gap_distance(iso: &Isolated, omega: f64) -> f64 {
    match iso.kind {
        Kind::RealIsolated => (iso.value.re - (omega - 1.0)).min(omega + 1.0 - iso.value.re),
        Kind::ImaginaryPair => (1.0 - omega.abs()) - iso.value.im,
        Kind::RealPair | Kind::ComplexQuartet => iso.value.re,
    }
}

/// Keeps isolated members of `fine` that reappear in `coarse`, a second
/// discretization of the same problem with different N and L.
///
/// Drift is measured to the nearest raw eigenvalue of `coarse`. True isolated
/// eigenvalues drift little compared with their distance to the band. Quartets
/// are treated by location. In the window 1−|ω| < |Im λ| < 1+|ω| only one band
/// branch exists, so box modes cannot collide there and a quartet is accepted
/// with a loose relative drift. Above 1+|ω| both branches overlap, and
/// discretized band modes of opposite signature produce spurious quartets, so a
/// tight relative drift is required.
pub fn filter_spurious(coarse: &Spectrum, fine: &Spectrum, tol: &Tolerances) -> Spectrum {
    let mut out = fine.clone();
    out.isolated.clear();
    let omega = fine.omega;
    for iso in &fine.isolated {
        let drift = coarse
            .raw
            .iter()
            .map(|z| (z - iso.value).norm().min((z - iso.value.conj()).norm()))
            .fold(f64::INFINITY, f64::min);
        let gap = gap_distance(iso, omega);
        let keep = match iso.kind {
            Kind::ComplexQuartet => {
                let re = iso.value.re;
                if iso.value.im < 1.0 + omega.abs() {
                    re > tol.quartet_floor && drift < tol.window_rel * re
                } else {
                    drift < tol.overlap_rel * re
                }
            }
            _ => drift < tol.match_abs + tol.match_rel * gap,
        };
        if keep {
            out.isolated.push(iso.clone());
        } else {
            out.filtered_out.extend(iso.members.iter().copied());
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaMatch {
    pub lambda: C64,
    pub gamma: C64,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaReport {
    pub matches: Vec<GammaMatch>,
    pub outliers: Vec<GammaMatch>,
}

impl GammaReport {
    pub fn ok(&self) -> bool {
        self.outliers.is_empty()
    }
}

/// For every isolated λ of `spec_l`, the γ of Mplus closest to −λ².
pub fn crosscheck_gamma(spec_l: &Spectrum, gammas: &[C64], tol: f64) -> GammaReport {
    let mut r = GammaReport {
        matches: vec![],
        outliers: vec![],
    };
    let lambdas = spec_l
        .isolated
        .iter()
        .flat_map(|i| i.members.iter().copied())
        .chain(spec_l.kernel.iter().copied());
    for lambda in lambdas {
        let target = -(lambda * lambda);
        let best = gammas
            .iter()
            .map(|&g| GammaMatch {
                lambda,
                gamma: g,
                error: (g - target).norm(),
            })
            .min_by(|a, b| a.error.total_cmp(&b.error));
        match best {
            Some(m) if m.error < tol => r.matches.push(m),
            Some(m) => r.outliers.push(m),
            None => r.outliers.push(GammaMatch {
                lambda,
                gamma: C64::new(f64::NAN, f64::NAN),
                error: f64::INFINITY,
            }),
        }
    }
    r
}

/// Discretization and classification settings for one ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SpectralConfig {
    /// Chebyshev degree of the primary discretization.
    pub n: usize,
    /// Halfwidth factor: L = lfac/β (clamped), unless `halfwidth` is set.
    pub lfac: f64,
    pub halfwidth: Option<f64>,
    /// The comparison discretization uses N·refine nodes on a domain refine times wider.
    pub refine: f64,
    pub tol: Tolerances,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            n: 256,
            lfac: 40.0,
            halfwidth: None,
            refine: 1.5,
            tol: Tolerances::default(),
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::Invalid(format!("N = {} < 8", self.n)));
        }
        if !(self.lfac > 0.0) || !(self.refine > 1.0) {
            return Err(Error::Invalid(
                "lfac must be positive and refine > 1".into(),
            ));
        }
        if let Some(l) = self.halfwidth {
            if !(l > 0.0) {
                return Err(Error::Invalid(format!("halfwidth {l} must be positive")));
            }
        }
        Ok(())
    }

    pub fn grid(&self, omega: f64) -> Result<ChebGrid> {
        let l = self
            .halfwidth
            .unwrap_or_else(|| halfwidth_auto(omega, self.lfac));
        ChebGrid::build_stretched(self.n, l, stretch_auto(omega, l))
    }

    pub fn refined(&self) -> Self {
        Self {
            n: (self.n as f64 * self.refine).round() as usize,
            lfac: self.lfac * self.refine,
            halfwidth: self.halfwidth.map(|l| l * self.refine),
            ..*self
        }
    }
}

/// Unclassified spectra on one grid.
#[derive(Debug, Clone, Serialize)]
pub struct RawSpectra {
    pub omega: f64,
    pub n: usize,
    pub halfwidth: f64,
    pub hplus: Vec<C64>,
    pub hminus: Vec<C64>,
    pub gamma: Vec<C64>,
}

pub fn raw_spectra(model: &Model, omega: f64, grid: &ChebGrid) -> Result<RawSpectra> {
    let profile = model.profile(grid.nodes(), omega)?;
    let p = model.params();
    let (hp, hm) = assemble_blocks(grid, &profile, &p, omega, Derivative::Skew)?;
    let w = grid.weights();
    let hp = weighted_similarity(&hp, w);
    let hm = weighted_similarity(&hm, w);
    let real = |v: Vec<f64>| v.into_iter().map(|x| C64::new(x, 0.0)).collect::<Vec<_>>();
    let hplus = real(eig_hermitian(&hp)?);
    let hminus = real(eig_hermitian(&hm)?);
    let (mp, _) = product_blocks(&hp, &hm)?;
    let gamma = eig_general(&mp)?;
    Ok(RawSpectra {
        omega,
        n: grid.degree(),
        halfwidth: grid.halfwidth(),
        hplus,
        hminus,
        gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub l_imag_pairs: usize,
    pub l_real_pairs: usize,
    pub l_quartets: usize,
    pub hplus: usize,
    pub hminus: usize,
}

impl Counts {
    pub fn of(l: &Spectrum, hplus: &Spectrum, hminus: &Spectrum) -> Self {
        Self {
            l_imag_pairs: l.count(Kind::ImaginaryPair),
            l_real_pairs: l.count(Kind::RealPair),
            l_quartets: l.count(Kind::ComplexQuartet),
            hplus: hplus.isolated.len(),
            hminus: hminus.isolated.len(),
        }
    }

    /// Isolated L eigenvalues counted in pairs: a quartet is two pairs.
    pub fn l_pairs(&self) -> usize {
        self.l_imag_pairs + self.l_real_pairs + 2 * self.l_quartets
    }
}

/// Filtered spectra of H+, H− and L at one ω.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub omega: f64,
    pub hplus: Spectrum,
    pub hminus: Spectrum,
    pub l: Spectrum,
    pub counts: Counts,
    /// Counts before spurious filtering, primary discretization.
    pub raw_counts: Counts,
    pub gamma: Vec<C64>,
}

pub fn analyze(model: &Model, omega: f64, cfg: &SpectralConfig) -> Result<Analysis> {
    cfg.validate()?;
    let tol = &cfg.tol;
    let fine_cfg = cfg.refined();
    let a = raw_spectra(model, omega, &cfg.grid(omega)?)?;
    let b = raw_spectra(model, omega, &fine_cfg.grid(omega)?)?;
    let classify_all = |r: &RawSpectra| {
        (
            classify(&r.hplus, omega, OperatorTag::Hplus, tol),
            classify(&r.hminus, omega, OperatorTag::Hminus, tol),
            classify(&r.gamma, omega, OperatorTag::Mplus, tol),
        )
    };
    let (hp_a, hm_a, l_a) = classify_all(&a);
    let (hp_b, hm_b, l_b) = classify_all(&b);
    let hplus = filter_spurious(&hp_a, &hp_b, tol);
    let hminus = filter_spurious(&hm_a, &hm_b, tol);
    let l = filter_spurious(&l_a, &l_b, tol);
    let counts = Counts::of(&l, &hplus, &hminus);
    Ok(Analysis {
        omega,
        raw_counts: Counts::of(&l_a, &hp_a, &hm_a),
        hplus,
        hminus,
        l,
        counts,
        gamma: b.gamma,
    })
}

/// Direct 4(N+1) eigensolve of L on one grid, classified without filtering and
/// checked against the product-path γ on the same grid.
#[derive(Debug, Clone, Serialize)]
pub struct DirectCheck {
    pub n: usize,
    pub direct: Spectrum,
    pub gamma: GammaReport,
}

pub fn direct_check(
    model: &Model,
    omega: f64,
    grid: &ChebGrid,
    tol: &Tolerances,
) -> Result<DirectCheck> {
    let profile = model.profile(grid.nodes(), omega)?;
    let (hp, hm) = assemble_blocks(grid, &profile, &model.params(), omega, Derivative::Skew)?;
    let lam = eig_general(&assemble_l(&hp, &hm)?)?;
    let direct = classify(&lam, omega, OperatorTag::L, tol);
    let w = grid.weights();
    let (mp, _) = product_blocks(&weighted_similarity(&hp, w), &weighted_similarity(&hm, w))?;
    let gamma = crosscheck_gamma(&direct, &eig_general(&mp)?, 1e-6);
    Ok(DirectCheck {
        n: grid.degree(),
        direct,
        gamma,
    })
}
