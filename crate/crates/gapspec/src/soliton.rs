//! Stationary gap solitons u(x,t) = u0(x)e^{iωt}, v(x,t) = v0(x)e^{iωt} with v0 = ū0.
//!
//! Three routes to a profile: the closed forms for the Kerr family a = (1,ρ,0,0)
//! and the grating family a = (0,0,1,s); the amplitude/phase reconstruction
//! u0 = √Q e^{iΘ} valid for any quadric coefficients; and the homogeneous
//! degree-2n family described by its angular coefficients A_s.
//!
//! Hyperbolic functions are evaluated in sech/tanh form so profiles stay finite
//! on wide domains where cosh² would overflow.

use crate::potential::{eval_w, grad_w, FieldPair, PotentialParams};
use crate::spectral_grid::{apply_real, ChebGrid};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::io::Write;

/// Below this the quadratic φ(t) is treated as having a double root.
const DISC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolitonParams {
    pub omega: f64,
    pub mu: f64,
    pub beta: f64,
}

impl SolitonParams {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > -1.0 && omega < 1.0) {
            return Err(Error::Domain(format!(
                "ω = {omega} outside the open gap (−1, 1)"
            )));
        }
        Ok(Self {
            omega,
            mu: (1.0 - omega) / (1.0 + omega),
            beta: (1.0 - omega * omega).sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    A1,
    A2,
    A3,
    A4,
    Special,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Decaying,
    BoundedNondecaying,
    Unbounded,
    Singular,
}

/// Open ω-interval on which one branch gives decaying solitons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainInterval {
    pub lo: f64,
    pub hi: f64,
    pub branch: Branch,
    pub lo_behavior: Boundary,
    pub hi_behavior: Boundary,
}

impl DomainInterval {
    pub fn contains(&self, omega: f64) -> bool {
        omega > self.lo && omega < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceReport {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub phi_roots: Vec<f64>,
    pub double_root: bool,
    pub case_label: CaseLabel,
    pub omega_domain: Vec<DomainInterval>,
}

impl ExistenceReport {
    pub fn branch_at(&self, omega: f64) -> Result<Branch> {
        self.omega_domain
            .iter()
            .find(|d| d.contains(omega))
            .map(|d| d.branch)
            .ok_or_else(|| {
                Error::Domain(format!(
                    "no decaying soliton at ω = {omega} (case {:?})",
                    self.case_label
                ))
            })
    }

    pub fn summary(&self) -> String {
        let mut s = format!("case {:?}", self.case_label);
        if self.omega_domain.is_empty() {
            s.push_str(", no decaying solutions");
        }
        for d in &self.omega_domain {
            let q = if d.branch == Branch::Plus { "Q+" } else { "Q-" };
            s.push_str(&format!(", {q} on ({}, {})", d.lo, d.hi));
        }
        s
    }
}

/// φ(t) = a4 t² + 2a3 t + (a1+a2)/2.
pub fn phi(t: f64, p: &PotentialParams) -> f64 {
    p.a4 * t * t + 2.0 * p.a3 * t + 0.5 * (p.a1 + p.a2)
}

/// Roots of φ in (−1, 1), ascending, and whether they form a double root.
fn phi_roots(p: &PotentialParams) -> (Vec<f64>, bool) {
    let a0 = 0.5 * (p.a1 + p.a2);
    let inside = |t: &f64| *t > -1.0 && *t < 1.0;
    if p.a4 == 0.0 {
        if p.a3 == 0.0 {
            return (vec![], false);
        }
        let t = -a0 / (2.0 * p.a3);
        return (Some(t).into_iter().filter(inside).collect(), false);
    }
    let disc = p.a3 * p.a3 - p.a4 * a0;
    if disc.abs() < DISC_TOL {
        let t = -p.a3 / p.a4;
        return (Some(t).into_iter().filter(inside).collect(), true);
    }
    if disc < 0.0 {
        return (vec![], false);
    }
    // t = (−a3 ∓ √disc)/a4 written without cancellation
    let sgn = if p.a3 >= 0.0 { 1.0 } else { -1.0 };
    let q = -(p.a3 + sgn * disc.sqrt());
    let (r1, r2) = if q != 0.0 {
        (q / p.a4, a0 / q)
    } else {
        (disc.sqrt() / p.a4, -disc.sqrt() / p.a4)
    };
    let mut r: Vec<f64> = [r1, r2].into_iter().filter(inside).collect();
    r.sort_by(f64::total_cmp);
    (r, false)
}

pub fn classify_existence(p: &PotentialParams) -> Result<ExistenceReport> {
    p.validate()?;
    if p.is_zero() {
        return Err(Error::Invalid("a = (0,0,0,0) has no nonlinearity".into()));
    }
    let a = -2.0 * p.a3 + p.a4 + 0.5 * (p.a1 + p.a2);
    let b = -2.0 * p.a4 + p.a1 + p.a2;
    let c = 2.0 * p.a3 + p.a4 + 0.5 * (p.a1 + p.a2);
    let (roots, double_root) = phi_roots(p);
    let iv = |lo, hi, branch, lo_behavior, hi_behavior| DomainInterval {
        lo,
        hi,
        branch,
        lo_behavior,
        hi_behavior,
    };
    let edge = if double_root {
        Boundary::Unbounded
    } else {
        Boundary::BoundedNondecaying
    };
    use Boundary::*;
    let (case_label, omega_domain) = if a.abs() < DISC_TOL || c.abs() < DISC_TOL {
        (CaseLabel::Special, vec![])
    } else if a < 0.0 && c > 0.0 {
        let t1 = roots.first().copied().unwrap_or(0.0);
        (
            CaseLabel::A1,
            vec![
                iv(-1.0, t1, Branch::Minus, Decaying, BoundedNondecaying),
                iv(t1, 1.0, Branch::Plus, BoundedNondecaying, Decaying),
            ],
        )
    } else if a > 0.0 && c > 0.0 {
        let d = match roots.last() {
            None => iv(-1.0, 1.0, Branch::Plus, Decaying, Decaying),
            Some(&t) => iv(t, 1.0, Branch::Plus, edge, Decaying),
        };
        (CaseLabel::A2, vec![d])
    } else if a < 0.0 && c < 0.0 {
        let d = match roots.first() {
            None => iv(-1.0, 1.0, Branch::Minus, Decaying, Decaying),
            Some(&t) => iv(-1.0, t, Branch::Minus, Decaying, edge),
        };
        (CaseLabel::A3, vec![d])
    } else {
        (CaseLabel::A4, vec![])
    };
    Ok(ExistenceReport {
        a,
        b,
        c,
        phi_roots: roots,
        double_root,
        case_label,
        omega_domain,
    })
}

/// Amplitude Q(x) = |u0(x)|² from the Q± closed forms.
pub fn amplitude_q(x: f64, sp: &SolitonParams, p: &PotentialParams, branch: Branch) -> Result<f64> {
    let (a, b, c) = (
        -2.0 * p.a3 + p.a4 + 0.5 * (p.a1 + p.a2),
        -2.0 * p.a4 + p.a1 + p.a2,
        2.0 * p.a3 + p.a4 + 0.5 * (p.a1 + p.a2),
    );
    let (om, mu) = (sp.omega, sp.mu);
    let psi = a * mu * mu + b * mu + c;
    // numerator and denominator divided by cosh⁴(βx); s = sech²(βx)
    let s = sech(sp.beta * x).powi(2);
    let (num, den) = match branch {
        Branch::Plus => (
            (1.0 - om) * ((mu + 1.0) * s - mu * s * s),
            psi - (b * mu + 2.0 * a * mu * mu) * s + a * mu * mu * s * s,
        ),
        Branch::Minus => (
            (om - 1.0) * ((mu + 1.0) * s - s * s),
            psi - (b * mu + 2.0 * c) * s + c * s * s,
        ),
    };
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Domain(format!(
            "singular amplitude denominator at x = {x}"
        )));
    }
    let q = num / den;
    if q < -1e-14 * (1.0 + num.abs()) || !q.is_finite() {
        return Err(Error::Domain(format!(
            "negative amplitude Q = {q} at x = {x} on branch {branch:?}"
        )));
    }
    Ok(q.max(0.0))
}

/// Phase Θ(x) with tanΘ = −√μ tanh(βx) (plus) or −√μ coth(βx) (minus).
///
/// The minus branch is continued through x = 0 by taking Θ ∈ (−π, 0), so
/// Θ(0) = −π/2 and u0 stays continuous.
pub fn phase_theta(x: f64, sp: &SolitonParams, branch: Branch) -> f64 {
    let r = sp.mu.sqrt();
    let bx = sp.beta * x;
    match branch {
        Branch::Plus => (-r * bx.tanh()).atan(),
        Branch::Minus => {
            if x == 0.0 {
                -FRAC_PI_2
            } else if x > 0.0 {
                (-r / bx.tanh()).atan()
            } else {
                (-r / bx.tanh()).atan() - std::f64::consts::PI
            }
        }
    }
}

fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm1,
    ClosedForm2a,
    ClosedForm2b,
    AppendixA,
    GeneralN,
}

/// Models with explicit closed-form profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedForm {
    Kerr { rho: f64 },
    Grating { s: f64 },
}

impl ClosedForm {
    pub fn params(&self) -> PotentialParams {
        match *self {
            ClosedForm::Kerr { rho } => PotentialParams::kerr(rho),
            ClosedForm::Grating { s } => PotentialParams::grating(s),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonProfile {
    pub omega: f64,
    pub branch: Branch,
    pub source: Source,
    pub x: Vec<f64>,
    pub u0: Vec<C64>,
    pub v0: Vec<C64>,
}

impl SolitonProfile {
    fn from_u(omega: f64, branch: Branch, source: Source, x: &[f64], u0: Vec<C64>) -> Self {
        let v0 = u0.iter().map(|z| z.conj()).collect();
        Self {
            omega,
            branch,
            source,
            x: x.to_vec(),
            u0,
            v0,
        }
    }

    /// The zero field on the given samples; useful as a linear-problem control.
    pub fn zero(omega: f64, x: &[f64]) -> Self {
        Self::from_u(
            omega,
            Branch::Plus,
            Source::AppendixA,
            x,
            vec![C64::new(0.0, 0.0); x.len()],
        )
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let u0: Vec<C64> = self.u0.iter().map(|z| z * factor).collect();
        Self::from_u(self.omega, self.branch, self.source, &self.x, u0)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,re_u0,im_u0,re_v0,im_v0")?;
        for ((x, u), v) in self.x.iter().zip(&self.u0).zip(&self.v0) {
            writeln!(
                w,
                "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                x, u.re, u.im, v.re, v.im
            )?;
        }
        Ok(())
    }
}

pub fn soliton_closed_form(
    x: &[f64],
    sp: &SolitonParams,
    model: ClosedForm,
) -> Result<SolitonProfile> {
    let (om, mu, beta) = (sp.omega, sp.mu, sp.beta);
    let r = mu.sqrt();
    match model {
        ClosedForm::Kerr { rho } => {
            if !(rho > -1.0) {
                return Err(Error::Domain(format!("Kerr model needs ρ > −1, got {rho}")));
            }
            let amp = (2.0 * (1.0 - om) / (1.0 + rho)).sqrt();
            let u = x
                .iter()
                .map(|&xi| {
                    let bx = beta * xi;
                    C64::new(amp * sech(bx), 0.0) / C64::new(1.0, r * bx.tanh())
                })
                .collect();
            Ok(SolitonProfile::from_u(
                om,
                Branch::Plus,
                Source::ClosedForm1,
                x,
                u,
            ))
        }
        ClosedForm::Grating { s } => {
            // Δ± are written for a4 = s; the ∓-branch denominators follow from
            // the amplitude formulas with A = s − 2, B = −2s, C = s + 2.
            let amp = ((1.0 - om) / 2.0).sqrt();
            if om > 0.0 && s > -2.0 {
                let c2 = 0.5 * ((s - 2.0) * mu * mu - 2.0 * s * mu + (s + 2.0));
                let c1 = 0.5 * (s * mu - (s - 2.0) * mu * mu);
                let c0 = 0.5 * (s - 2.0) * mu * mu;
                let u = x
                    .iter()
                    .map(|&xi| {
                        let bx = beta * xi;
                        let q = sech(bx).powi(2);
                        C64::new(1.0, -r * bx.tanh())
                            * (amp * sech(bx) / (c2 + 2.0 * c1 * q + c0 * q * q).sqrt())
                    })
                    .collect();
                Ok(SolitonProfile::from_u(
                    om,
                    Branch::Plus,
                    Source::ClosedForm2a,
                    x,
                    u,
                ))
            } else if om < 0.0 && s < 2.0 {
                let d2 = 0.5 * ((2.0 - s) * mu * mu + 2.0 * s * mu - (s + 2.0));
                let d1 = 0.5 * (s + 2.0 - s * mu);
                let d0 = -0.5 * (s + 2.0);
                let u = x
                    .iter()
                    .map(|&xi| {
                        let bx = beta * xi;
                        let q = sech(bx).powi(2);
                        C64::new(bx.tanh(), -r)
                            * (amp * sech(bx) / (d2 + 2.0 * d1 * q + d0 * q * q).sqrt())
                    })
                    .collect();
                Ok(SolitonProfile::from_u(
                    om,
                    Branch::Minus,
                    Source::ClosedForm2b,
                    x,
                    u,
                ))
            } else {
                Err(Error::Domain(format!(
                    "grating model needs (ω > 0, s > −2) or (ω < 0, s < 2); got ω = {om}, s = {s}"
                )))
            }
        }
    }
}

/// u0 = √Q e^{iΘ} for any quadric coefficients inside the existence domain.
pub fn soliton_appendix_a(
    x: &[f64],
    sp: &SolitonParams,
    p: &PotentialParams,
) -> Result<SolitonProfile> {
    let report = classify_existence(p)?;
    let branch = report.branch_at(sp.omega)?;
    let u = x
        .iter()
        .map(|&xi| {
            Ok(C64::from_polar(
                amplitude_q(xi, sp, p, branch)?.sqrt(),
                phase_theta(xi, sp, branch),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SolitonProfile::from_u(
        sp.omega,
        branch,
        Source::AppendixA,
        x,
        u,
    ))
}

/// Homogeneous potential of degree 2n given by angular coefficients A_0..A_n.
///
/// Θ solves Θ′ = (n−1)(ω − cos 2Θ) and Q^{n−1} = (cos 2Θ − ω)/Σ A_s cos 2sΘ.
/// The branch is whichever makes the right side nonnegative along the whole profile.
pub fn soliton_general_n(
    x: &[f64],
    sp: &SolitonParams,
    a_coeffs: &[f64],
    n: usize,
) -> Result<SolitonProfile> {
    if n < 2 || a_coeffs.len() != n + 1 {
        return Err(Error::Invalid(format!(
            "need n ≥ 2 and n+1 angular coefficients, got n = {n}, {}",
            a_coeffs.len()
        )));
    }
    let k = (n - 1) as f64;
    let attempt = |branch: Branch| -> Option<Vec<C64>> {
        x.iter()
            .map(|&xi| {
                let th = phase_theta(k * xi, sp, branch);
                let num = cos2theta_minus_omega(k * xi, sp, branch);
                let den: f64 = a_coeffs
                    .iter()
                    .enumerate()
                    .map(|(s, a)| a * (2.0 * s as f64 * th).cos())
                    .sum();
                let ratio = num / den;
                if den == 0.0 || ratio < -1e-14 || !ratio.is_finite() {
                    return None;
                }
                Some(C64::from_polar(ratio.max(0.0).powf(1.0 / k).sqrt(), th))
            })
            .collect()
    };
    for branch in [Branch::Plus, Branch::Minus] {
        if let Some(u) = attempt(branch) {
            return Ok(SolitonProfile::from_u(
                sp.omega,
                branch,
                Source::GeneralN,
                x,
                u,
            ));
        }
    }
    Err(Error::Domain(format!(
        "sign-incompatible denominator: no decaying solution at ω = {}",
        sp.omega
    )))
}

/// cos 2Θ − ω on the phase trajectory, written without the cancellation that
/// occurs in the tails where cos 2Θ → ω.
fn cos2theta_minus_omega(x: f64, sp: &SolitonParams, branch: Branch) -> f64 {
    let (mu, y) = (sp.mu, sp.beta * x);
    match branch {
        // tanΘ = −√μ tanh y: cos 2Θ − ω = 2μ sech²y / ((1 + μ tanh²y)(1 + μ))
        Branch::Plus => 2.0 * mu * sech(y).powi(2) / ((1.0 + mu * y.tanh().powi(2)) * (1.0 + mu)),
        // tanΘ = −√μ coth y
        Branch::Minus => -2.0 * mu / ((y.sinh().powi(2) + mu * y.cosh().powi(2)) * (1.0 + mu)),
    }
}

fn check_on_grid(profile: &SolitonProfile, grid: &ChebGrid) -> Result<()> {
    if profile.len() != grid.len() {
        return Err(Error::Length {
            expected: grid.len(),
            got: profile.len(),
        });
    }
    if profile
        .x
        .iter()
        .zip(grid.nodes())
        .any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + b.abs()))
    {
        return Err(Error::Invalid("profile is not sampled on this grid".into()));
    }
    Ok(())
}

/// Max over interior nodes of |iu0′ − ωu0 + v0 − ∂ūW| + |−iv0′ − ωv0 + u0 − ∂v̄W|.
pub fn ode_residual(profile: &SolitonProfile, grid: &ChebGrid, p: &PotentialParams) -> Result<f64> {
    check_on_grid(profile, grid)?;
    let du = apply_real(grid.diff(), &profile.u0);
    let dv = apply_real(grid.diff(), &profile.v0);
    let i = C64::i();
    let om = profile.omega;
    let n = grid.len();
    Ok((1..n - 1)
        .map(|j| {
            let (u, v) = (profile.u0[j], profile.v0[j]);
            let (gu, gv) = grad_w(FieldPair::new(u, v), p);
            (i * du[j] - u * om + v - gu).norm() + (-i * dv[j] - v * om + u - gv).norm()
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Conserved {
    pub q_total: f64,
    pub p: f64,
    pub h: f64,
    pub lambda: f64,
    /// Largest |u0|, |v0| at the two ends of the domain.
    pub boundary_max: f64,
    /// Set when boundary values exceed 1e−8, i.e. the domain truncates the soliton.
    pub truncated: bool,
}

/// Power Q, momentum P, Hamiltonian H and Λ = H + ωQ by Clenshaw–Curtis quadrature.
pub fn conserved_quantities(
    profile: &SolitonProfile,
    grid: &ChebGrid,
    p: &PotentialParams,
) -> Result<Conserved> {
    check_on_grid(profile, grid)?;
    let du = apply_real(grid.diff(), &profile.u0);
    let dv = apply_real(grid.diff(), &profile.v0);
    let i = C64::i();
    let n = grid.len();
    let mut power = vec![0.0; n];
    let mut mom = vec![0.0; n];
    let mut ham = vec![0.0; n];
    for j in 0..n {
        let (u, v) = (profile.u0[j], profile.v0[j]);
        let cu = u * du[j].conj() - du[j] * u.conj();
        let cv = v * dv[j].conj() - dv[j] * v.conj();
        power[j] = u.norm_sqr() + v.norm_sqr();
        mom[j] = (i * 0.5 * (cu + cv)).re;
        ham[j] =
            eval_w(FieldPair::new(u, v), p) - 2.0 * (v * u.conj()).re + (i * 0.5 * (cu - cv)).re;
    }
    let q_total = grid.integrate(&power);
    let h = grid.integrate(&ham);
    let ends = [0, n - 1];
    let boundary_max = ends
        .iter()
        .map(|&j| profile.u0[j].norm().max(profile.v0[j].norm()))
        .fold(0.0, f64::max);
    Ok(Conserved {
        q_total,
        p: grid.integrate(&mom),
        h,
        lambda: h + profile.omega * q_total,
        boundary_max,
        truncated: boundary_max > 1e-8,
    })
}

/// A potential together with the preferred way of building its profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Kerr { rho: f64 },
    Grating { s: f64 },
    General(PotentialParams),
}

impl Model {
    pub fn params(&self) -> PotentialParams {
        match *self {
            Model::Kerr { rho } => PotentialParams::kerr(rho),
            Model::Grating { s } => PotentialParams::grating(s),
            Model::General(p) => p,
        }
    }

    pub fn profile(&self, x: &[f64], omega: f64) -> Result<SolitonProfile> {
        let sp = SolitonParams::new(omega)?;
        match *self {
            Model::Kerr { rho } => soliton_closed_form(x, &sp, ClosedForm::Kerr { rho }),
            Model::Grating { s } => soliton_closed_form(x, &sp, ClosedForm::Grating { s }),
            Model::General(p) => soliton_appendix_a(x, &sp, &p),
        }
    }

    /// Check ω against the existence domain without sampling anything.
    pub fn admissible(&self, omega: f64) -> Result<()> {
        self.profile(&[0.0], omega).map(|_| ())
    }
}
