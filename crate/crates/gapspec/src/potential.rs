//! The symmetric quadric potential
//! W = a1/2(|u|⁴+|v|⁴) + a2|u|²|v|² + a3(|u|²+|v|²)(vū+v̄u) + a4/2(vū+v̄u)²
//! with its Wirtinger gradient and second derivatives.
//!
//! Derivatives treat u and ū (v and v̄) as independent variables.

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl PotentialParams {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self> {
        let p = Self { a1, a2, a3, a4 };
        p.validate()?;
        Ok(p)
    }

    /// a = (1, ρ, 0, 0).
    pub fn kerr(rho: f64) -> Self {
        Self {
            a1: 1.0,
            a2: rho,
            a3: 0.0,
            a4: 0.0,
        }
    }

    /// a = (0, 0, 1, s).
    pub fn grating(s: f64) -> Self {
        Self {
            a1: 0.0,
            a2: 0.0,
            a3: 1.0,
            a4: s,
        }
    }

    /// The integrable massive Thirring case a = (0, 1, 0, 0).
    pub fn thirring() -> Self {
        Self {
            a1: 0.0,
            a2: 1.0,
            a3: 0.0,
            a4: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().all(|a| a.is_finite()) {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "non-finite potential coefficients {:?}",
                self.as_array()
            )))
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a1, self.a2, self.a3, self.a4]
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|&a| a == 0.0)
    }

    /// Angular coefficients (A0, A1, A2) of the homogeneous n = 2 form.
    pub fn angular_coeffs(&self) -> [f64; 3] {
        [
            (self.a1 + self.a2 + self.a4) / 2.0,
            2.0 * self.a3,
            self.a4 / 2.0,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPair {
    pub u: C64,
    pub v: C64,
}

impl FieldPair {
    pub fn new(u: C64, v: C64) -> Self {
        Self { u, v }
    }

    /// The reduced point v = ū used along soliton profiles.
    pub fn reduced(u0: C64) -> Self {
        Self {
            u: u0,
            v: u0.conj(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

pub fn eval_w(fp: FieldPair, p: &PotentialParams) -> f64 {
    // written in u↔v symmetric combinations so the interchange symmetry is exact in floating point
    let sum = fp.u.norm_sqr() + fp.v.norm_sqr();
    let prod = fp.u.norm_sqr() * fp.v.norm_sqr();
    // vū + v̄u = 2 Re(vū)
    let c = 2.0 * (fp.u.re * fp.v.re + fp.u.im * fp.v.im);
    0.5 * p.a1 * (sum * sum - 2.0 * prod) + p.a2 * prod + p.a3 * sum * c + 0.5 * p.a4 * c * c
}

/// (∂ūW, ∂v̄W).
pub fn grad_w(fp: FieldPair, p: &PotentialParams) -> (C64, C64) {
    (half_grad(fp.u, fp.v, p), half_grad(fp.v, fp.u, p))
}

fn half_grad(u: C64, v: C64, p: &PotentialParams) -> C64 {
    let uu = u.norm_sqr();
    let vv = v.norm_sqr();
    u * (p.a1 * uu + p.a2 * vv)
        + (v * (2.0 * uu + vv) + u * u * v.conj()) * p.a3
        + (v * v * u.conj() + u * vv) * p.a4
}

/// Second derivatives V[i][j] = ∂_{conj(wᵢ)} ∂_{wⱼ} W with w = (u, ū, v, v̄).
///
/// Row i is the derivative with respect to the conjugate of variable i, which
/// reproduces the printed arrangement (rows ū, u, v̄, v).
pub fn hessian_full(fp: FieldPair, p: &PotentialParams) -> [[C64; 4]; 4] {
    let (u, v) = (fp.u, fp.v);
    let (ub, vb) = (u.conj(), v.conj());
    let [a1, a2, a3, a4] = p.as_array();
    let uu = u * ub;
    let vv = v * vb;
    let mix = u * vb + ub * v;

    let h00 = uu * (2.0 * a1) + vv * (a2 + a4) + mix * (2.0 * a3);
    let h01 = u * u * a1 + u * v * (2.0 * a3) + v * v * a4;
    let h02 = u * vb * (a2 + a4) + (uu + vv) * (2.0 * a3) + ub * v * (2.0 * a4);
    let h03 = u * v * (a2 + a4) + (u * u + v * v) * a3;
    let h22 = vv * (2.0 * a1) + uu * (a2 + a4) + mix * (2.0 * a3);
    let h23 = v * v * a1 + u * v * (2.0 * a3) + u * u * a4;

    [
        [h00, h01, h02, h03],
        [h01.conj(), h00, h03.conj(), h02.conj()],
        [h02.conj(), h03, h22, h23],
        [h03.conj(), h02, h23.conj(), h22],
    ]
}

pub type Mat2 = [[C64; 2]; 2];

/// The 2×2 blocks V± evaluated at v0 = ū0.
pub fn reduced_potentials(u0: C64, p: &PotentialParams) -> (Mat2, Mat2) {
    let h = hessian_full(FieldPair::reduced(u0), p);
    let block = |s: f64| -> Mat2 {
        [
            [h[0][0] + h[0][3] * s, h[0][1] + h[0][2] * s],
            [h[1][0] + h[1][3] * s, h[1][1] + h[1][2] * s],
        ]
    };
    (block(1.0), block(-1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // Wirtinger derivative by central differences: ∂z̄ f = (∂_re + i ∂_im) f / 2.
    fn fd_conj<F: Fn(C64) -> f64>(f: F, z: C64, h: f64) -> C64 {
        let dre = (f(z + h) - f(z - h)) / (2.0 * h);
        let dim = (f(z + c(0.0, h)) - f(z - c(0.0, h))) / (2.0 * h);
        c(dre, dim) * 0.5
    }

    fn sample(seed: u64) -> (FieldPair, PotentialParams) {
        let mut s = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let fp = FieldPair::new(c(next(), next()), c(next(), next()));
        let p = PotentialParams {
            a1: next(),
            a2: next(),
            a3: next(),
            a4: next(),
        };
        (fp, p)
    }

    #[test]
    fn w_examples() {
        let one = FieldPair::new(c(1.0, 0.0), c(0.0, 0.0));
        assert_eq!(eval_w(one, &PotentialParams::kerr(0.0)), 0.5);
        let zero = FieldPair::new(c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(
            eval_w(zero, &PotentialParams::new(0.3, -1.0, 2.0, 0.7).unwrap()),
            0.0
        );
        let orth = FieldPair::new(c(1.0, 0.0), c(0.0, 1.0));
        assert_eq!(eval_w(orth, &PotentialParams::grating(0.0)), 0.0);
    }

    #[test]
    fn grad_examples() {
        let (gu, gv) = grad_w(
            FieldPair::new(c(2.0, 0.0), c(0.0, 0.0)),
            &PotentialParams::kerr(0.0),
        );
        assert_eq!(gu, c(8.0, 0.0));
        assert_eq!(gv, c(0.0, 0.0));
    }

    #[test]
    fn grad_matches_finite_differences() {
        for seed in 0..20 {
            let (fp, p) = sample(seed);
            let (gu, gv) = grad_w(fp, &p);
            let fu = fd_conj(|z| eval_w(FieldPair::new(z, fp.v), &p), fp.u, 1e-5);
            let fv = fd_conj(|z| eval_w(FieldPair::new(fp.u, z), &p), fp.v, 1e-5);
            assert!((gu - fu).norm() < 1e-8, "seed {seed}: {gu} vs {fu}");
            assert!((gv - fv).norm() < 1e-8, "seed {seed}: {gv} vs {fv}");
        }
    }

    #[test]
    fn grad_swaps_under_interchange() {
        let (fp, p) = sample(7);
        let (gu, gv) = grad_w(fp, &p);
        let (su, sv) = grad_w(FieldPair::new(fp.v, fp.u), &p);
        assert!((gu - sv).norm() < 1e-14 && (gv - su).norm() < 1e-14);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        // Row i differentiates ∂_{conj wᵢ}W; the gradient gives rows 0 (∂ū) and 2 (∂v̄),
        // rows 1 and 3 are their conjugates.
        for seed in 0..20 {
            let (fp, p) = sample(100 + seed);
            let h = hessian_full(fp, &p);
            let hstep = 1e-5;
            let grad_row = |f: FieldPair| {
                let (gu, gv) = grad_w(f, &p);
                [gu, gu.conj(), gv, gv.conj()]
            };
            // ∂_w g = (∂_re − i ∂_im) g / 2, ∂_w̄ g = (∂_re + i ∂_im) g / 2
            let shift = |k: usize, d: C64| match k {
                0 | 1 => FieldPair::new(fp.u + d, fp.v),
                _ => FieldPair::new(fp.u, fp.v + d),
            };
            for j in 0..4 {
                let k = j;
                let re_p = grad_row(shift(k, c(hstep, 0.0)));
                let re_m = grad_row(shift(k, c(-hstep, 0.0)));
                let im_p = grad_row(shift(k, c(0.0, hstep)));
                let im_m = grad_row(shift(k, c(0.0, -hstep)));
                let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
                for i in 0..4 {
                    let dre = (re_p[i] - re_m[i]) / (2.0 * hstep);
                    let dim = (im_p[i] - im_m[i]) / (2.0 * hstep);
                    let fd = (dre + c(0.0, sign) * dim) * 0.5;
                    assert!(
                        (h[i][j] - fd).norm() < 1e-7,
                        "seed {seed} ({i},{j}): {} vs {}",
                        h[i][j],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn hessian_hermitian_and_zero_at_origin() {
        let (fp, p) = sample(3);
        let h = hessian_full(fp, &p);
        for i in 0..4 {
            for j in 0..4 {
                assert!((h[i][j] - h[j][i].conj()).norm() < 1e-15);
            }
        }
        let z = hessian_full(FieldPair::new(c(0.0, 0.0), c(0.0, 0.0)), &p);
        assert!(z.iter().flatten().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn reduced_point_identity() {
        // ∂²_{uū}W = ∂²_{vv̄}W on v = ū
        let (fp, p) = sample(11);
        let h = hessian_full(FieldPair::reduced(fp.u), &p);
        assert!((h[0][0] - h[2][2]).norm() < 1e-14);
    }

    #[test]
    fn reduced_potential_examples() {
        let (vp, vm) = reduced_potentials(c(2f64.sqrt(), 0.0), &PotentialParams::kerr(0.0));
        let want = [[c(4.0, 0.0), c(2.0, 0.0)], [c(2.0, 0.0), c(4.0, 0.0)]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((vp[i][j] - want[i][j]).norm() < 1e-14);
                assert!((vm[i][j] - want[i][j]).norm() < 1e-14);
            }
        }
        let (zp, zm) = reduced_potentials(c(0.0, 0.0), &PotentialParams::grating(1.0));
        assert!(zp
            .iter()
            .chain(zm.iter())
            .flatten()
            .all(|e| e.norm() == 0.0));
    }

    #[test]
    fn reduced_potentials_match_printed_examples() {
        let u0 = c(0.37, -0.81);
        let ub = u0.conj();
        let m2 = u0.norm_sqr();
        for rho in [0.0, 0.5, -0.3] {
            let (vp, vm) = reduced_potentials(u0, &PotentialParams::kerr(rho));
            let k = 1.0 + rho;
            let ep = [
                [c(2.0 * m2, 0.0) * k, u0 * u0 * k],
                [ub * ub * k, c(2.0 * m2, 0.0) * k],
            ];
            let em = [
                [c(2.0 * m2, 0.0), u0 * u0 * (1.0 - rho)],
                [ub * ub * (1.0 - rho), c(2.0 * m2, 0.0)],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((vp[i][j] - ep[i][j]).norm() < 1e-14);
                    assert!((vm[i][j] - em[i][j]).norm() < 1e-14);
                }
            }
        }
        for s in [0.0, 1.0, -0.4] {
            let (vp, vm) = reduced_potentials(u0, &PotentialParams::grating(s));
            let re2 = u0 * u0 + ub * ub;
            let ep = [
                [
                    re2 * 3.0 + c(2.0 * m2 * s, 0.0),
                    c(6.0 * m2, 0.0) + (u0 * u0 + ub * ub * 3.0) * s,
                ],
                [
                    c(6.0 * m2, 0.0) + (ub * ub + u0 * u0 * 3.0) * s,
                    re2 * 3.0 + c(2.0 * m2 * s, 0.0),
                ],
            ];
            let em = [
                [re2, c(-2.0 * m2, 0.0) - re2 * s],
                [c(-2.0 * m2, 0.0) - re2 * s, re2],
            ];
            for i in 0..2 {
                for j in 0..2 {
                    assert!((vp[i][j] - ep[i][j]).norm() < 1e-13, "V+ s={s} ({i},{j})");
                    assert!((vm[i][j] - em[i][j]).norm() < 1e-13, "V- s={s} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn gauge_and_interchange_invariance() {
        for seed in 0..10 {
            let (fp, p) = sample(200 + seed);
            let w = eval_w(fp, &p);
            let ph = C64::from_polar(1.0, 0.3 + seed as f64);
            let rotated = FieldPair::new(fp.u * ph, fp.v * ph);
            assert!((eval_w(rotated, &p) - w).abs() < 1e-12);
            assert_eq!(eval_w(FieldPair::new(fp.v, fp.u), &p), w);
        }
    }

    #[test]
    fn differential_identities() {
        // i(u∂u − ū∂ū + v∂v − v̄∂v̄)W = 0 everywhere; (u∂u + ū∂ū − v∂v − v̄∂v̄)W = 0 on |u| = |v|.
        for seed in 0..10 {
            let (fp, p) = sample(300 + seed);
            let h = 1e-5;
            let du_bar = fd_conj(|z| eval_w(FieldPair::new(z, fp.v), &p), fp.u, h);
            let dv_bar = fd_conj(|z| eval_w(FieldPair::new(fp.u, z), &p), fp.v, h);
            // W real, so ∂u W = conj(∂ū W)
            let gauge = fp.u * du_bar.conj() - fp.u.conj() * du_bar + fp.v * dv_bar.conj()
                - fp.v.conj() * dv_bar;
            assert!(gauge.norm() < 1e-8);

            let v_eq = C64::from_polar(fp.u.norm(), 1.1 * seed as f64);
            let q = FieldPair::new(fp.u, v_eq);
            let du_bar = fd_conj(|z| eval_w(FieldPair::new(z, q.v), &p), q.u, h);
            let dv_bar = fd_conj(|z| eval_w(FieldPair::new(q.u, z), &p), q.v, h);
            let swap = q.u * du_bar.conj() + q.u.conj() * du_bar
                - q.v * dv_bar.conj()
                - q.v.conj() * dv_bar;
            assert!(swap.norm() < 1e-8);
        }
    }

    #[test]
    fn json_round_trip() {
        let p = PotentialParams::new(1.0, 0.25, -0.5, 2.0).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"a3\":-0.5"));
        assert_eq!(serde_json::from_str::<PotentialParams>(&s).unwrap(), p);
        assert!(PotentialParams::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }
}
