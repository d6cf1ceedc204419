//! Counts of isolated eigenvalues along a decreasing ω grid, count-change events,
//! and bisection of the ω where a count changes.

use crate::potential::PotentialParams;
use crate::soliton::Model;
use crate::spectrum::{analyze, Analysis, Counts, SpectralConfig};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    QuartetBirth,
    QuartetDeath,
    #[serde(rename = "edge_bifurcation_Hplus")]
    EdgeBifurcationHplus,
    #[serde(rename = "edge_bifurcation_Hminus")]
    EdgeBifurcationHminus,
    PairBirth,
    PairDeath,
}

impl EventKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "quartet_birth" => EventKind::QuartetBirth,
            "quartet_death" => EventKind::QuartetDeath,
            "edge_bifurcation_Hplus" | "hplus" => EventKind::EdgeBifurcationHplus,
            "edge_bifurcation_Hminus" | "hminus" => EventKind::EdgeBifurcationHminus,
            "pair_birth" => EventKind::PairBirth,
            "pair_death" => EventKind::PairDeath,
            _ => return Err(Error::Invalid(format!("unknown event kind {s:?}"))),
        })
    }

    /// The integer whose change defines the event.
    pub fn indicator(&self, c: &Counts) -> usize {
        match self {
            EventKind::QuartetBirth | EventKind::QuartetDeath => c.l_quartets,
            EventKind::EdgeBifurcationHplus => c.hplus,
            EventKind::EdgeBifurcationHminus => c.hminus,
            EventKind::PairBirth | EventKind::PairDeath => c.l_imag_pairs + c.l_real_pairs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Event {
    /// (ω_lo, ω_hi) of two consecutive sweep points.
    pub omega_bracket: (f64, f64),
    pub kind: EventKind,
    /// Indicator at ω_hi and ω_lo.
    pub before: usize,
    pub after: usize,
    pub refined_omega: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub omega: f64,
    pub counts: Option<Counts>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub model: Model,
    pub params: PotentialParams,
    pub omega_values: Vec<f64>,
    pub points: Vec<SweepPoint>,
    pub events: Vec<Event>,
}

impl SweepReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "omega,L_imag_pairs,L_real_pairs,L_quartets,Hplus_isolated,Hminus_isolated"
        )?;
        for p in &self.points {
            match p.counts {
                Some(c) => writeln!(
                    w,
                    "{:.15e},{},{},{},{},{}",
                    p.omega, c.l_imag_pairs, c.l_real_pairs, c.l_quartets, c.hplus, c.hminus
                )?,
                None => writeln!(w, "{:.15e},,,,,", p.omega)?,
            }
        }
        Ok(())
    }
}

/// Report plus the per-ω spectra it was built from (None where ω was skipped).
#[derive(Debug, Clone)]
pub struct Sweep {
    pub report: SweepReport,
    pub analyses: Vec<Option<Analysis>>,
}

/// `steps` equally spaced points from `hi` down to `lo`.
pub fn omega_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::Invalid("steps must be at least 1".into()));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::Invalid(format!("bad range ({lo}, {hi})")));
    }
    if lo <= -1.0 || hi >= 1.0 {
        return Err(Error::Domain(format!(
            "range ({lo}, {hi}) leaves the gap (-1, 1)"
        )));
    }
    if steps == 1 {
        return Ok(vec![hi]);
    }
    let h = (hi - lo) / (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            if i + 1 == steps {
                lo
            } else {
                hi - i as f64 * h
            }
        })
        .collect())
}

fn run_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(0) => Err(Error::Invalid("jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Filtered spectra at every ω of the grid, in parallel over ω.
///
/// ω without a decaying soliton are kept as warning entries. Eigensolver
/// failures abort the sweep.
pub fn sweep(
    model: &Model,
    lo: f64,
    hi: f64,
    steps: usize,
    cfg: &SpectralConfig,
    jobs: Option<usize>,
) -> Result<Sweep> {
    cfg.validate()?;
    model.params().validate()?;
    let omegas = omega_grid(lo, hi, steps)?;
    let results: Vec<Result<Option<Analysis>>> = run_pool(jobs, || {
        omegas
            .par_iter()
            .map(|&om| match model.admissible(om) {
                Err(Error::Domain(_)) => Ok(None),
                Err(e) => Err(e),
                Ok(()) => analyze(model, om, cfg).map(Some),
            })
            .collect()
    })?;
    let mut analyses = Vec::with_capacity(omegas.len());
    let mut points = Vec::with_capacity(omegas.len());
    for (&omega, r) in omegas.iter().zip(results) {
        let a = r?;
        let warning = match &a {
            None => model.admissible(omega).err().map(|e| e.to_string()),
            Some(_) => None,
        };
        points.push(SweepPoint {
            omega,
            counts: a.as_ref().map(|a| a.counts),
            warning,
        });
        analyses.push(a);
    }
    let events = detect_events(&points);
    Ok(Sweep {
        report: SweepReport {
            model: *model,
            params: model.params(),
            omega_values: omegas,
            points,
            events,
        },
        analyses,
    })
}

/// Count changes between consecutive admissible points.
pub fn detect_events(points: &[SweepPoint]) -> Vec<Event> {
    let mut events = vec![];
    let valid: Vec<(f64, Counts)> = points
        .iter()
        .filter_map(|p| p.counts.map(|c| (p.omega, c)))
        .collect();
    for w in valid.windows(2) {
        let ((hi, a), (lo, b)) = (w[0], w[1]);
        let pairs = [
            (EventKind::QuartetBirth, EventKind::QuartetDeath),
            (EventKind::PairBirth, EventKind::PairDeath),
            (
                EventKind::EdgeBifurcationHplus,
                EventKind::EdgeBifurcationHplus,
            ),
            (
                EventKind::EdgeBifurcationHminus,
                EventKind::EdgeBifurcationHminus,
            ),
        ];
        for (up, down) in pairs {
            let (before, after) = (up.indicator(&a), up.indicator(&b));
            if before != after {
                let kind = if after > before { up } else { down };
                events.push(Event {
                    omega_bracket: (lo, hi),
                    kind,
                    before,
                    after,
                    refined_omega: None,
                });
            }
        }
    }
    events
}

/// Bisects on the event indicator until the bracket is narrower than `tol_omega`.
pub fn locate_bifurcation(
    model: &Model,
    bracket: (f64, f64),
    kind: EventKind,
    tol_omega: f64,
    cfg: &SpectralConfig,
) -> Result<f64> {
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    if !(tol_omega > 0.0) {
        return Err(Error::Invalid(format!(
            "tolerance {tol_omega} must be positive"
        )));
    }
    if lo <= -1.0 || hi >= 1.0 {
        return Err(Error::Domain(format!(
            "bracket ({lo}, {hi}) leaves the gap (-1, 1)"
        )));
    }
    let count = |om: f64| -> Result<usize> { Ok(kind.indicator(&analyze(model, om, cfg)?.counts)) };
    let c_hi = count(hi)?;
    let c_lo = count(lo)?;
    if c_hi == c_lo {
        return Err(Error::Invalid(format!(
            "{kind:?} indicator is {c_hi} at both ends of ({lo}, {hi})"
        )));
    }
    while hi - lo >= tol_omega {
        let mid = 0.5 * (lo + hi);
        if count(mid)? == c_hi {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Refines every event of the report in place.
pub fn refine_events(report: &mut SweepReport, tol_omega: f64, cfg: &SpectralConfig) -> Result<()> {
    let model = report.model;
    for ev in &mut report.events {
        ev.refined_omega = Some(locate_bifurcation(
            &model,
            ev.omega_bracket,
            ev.kind,
            tol_omega,
            cfg,
        )?);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct FrameEntry<'a> {
    index: usize,
    omega: f64,
    counts: Option<Counts>,
    files: Vec<String>,
    warning: Option<&'a str>,
}

/// Writes frame_{index}_{L,Hplus,Hminus}.csv per analysed ω plus index.json.
pub fn emit_frames(
    report: &SweepReport,
    analyses: &[Option<Analysis>],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if analyses.len() != report.points.len() {
        return Err(Error::Length {
            expected: report.points.len(),
            got: analyses.len(),
        });
    }
    fs::create_dir_all(out_dir)?;
    let mut written = vec![];
    let mut entries = vec![];
    for (i, (pt, a)) in report.points.iter().zip(analyses).enumerate() {
        let mut files = vec![];
        if let Some(a) = a {
            for (tag, spec) in [("L", &a.l), ("Hplus", &a.hplus), ("Hminus", &a.hminus)] {
                let name = format!("frame_{i:03}_{tag}.csv");
                let path = out_dir.join(&name);
                let mut buf = Vec::new();
                spec.write_csv(&mut buf)?;
                fs::write(&path, buf)?;
                written.push(path);
                files.push(name);
            }
        }
        entries.push(FrameEntry {
            index: i,
            omega: pt.omega,
            counts: pt.counts,
            files,
            warning: pt.warning.as_deref(),
        });
    }
    let index = out_dir.join("index.json");
    fs::write(&index, serde_json::to_string_pretty(&entries)?)?;
    written.push(index);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(omega: f64, q: usize, hp: usize) -> SweepPoint {
        SweepPoint {
            omega,
            counts: Some(Counts {
                l_imag_pairs: 1,
                l_real_pairs: 0,
                l_quartets: q,
                hplus: hp,
                hminus: 1,
            }),
            warning: None,
        }
    }

    #[test]
    fn grid_and_errors() {
        assert!(matches!(omega_grid(0.0, 0.5, 0), Err(Error::Invalid(_))));
        assert!(matches!(omega_grid(-1.0, 0.5, 3), Err(Error::Domain(_))));
        assert_eq!(omega_grid(0.1, 0.5, 1).unwrap(), vec![0.5]);
        let g = omega_grid(-0.5, 0.5, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.5);
        assert_eq!(g[4], -0.5);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn events_from_counts() {
        let pts = vec![
            pt(0.5, 0, 1),
            pt(0.4, 0, 1),
            SweepPoint {
                omega: 0.3,
                counts: None,
                warning: Some("x".into()),
            },
            pt(0.2, 1, 2),
            pt(0.1, 0, 2),
        ];
        let ev = detect_events(&pts);
        let kinds: Vec<_> = ev.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![
                EventKind::QuartetBirth,
                EventKind::EdgeBifurcationHplus,
                EventKind::QuartetDeath
            ]
        );
        assert_eq!(ev[0].omega_bracket, (0.2, 0.4));
        assert_eq!(ev[2].omega_bracket, (0.1, 0.2));
        for e in &ev {
            assert!(e.omega_bracket.0 < e.omega_bracket.1);
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [
            EventKind::QuartetBirth,
            EventKind::QuartetDeath,
            EventKind::EdgeBifurcationHplus,
            EventKind::EdgeBifurcationHminus,
            EventKind::PairBirth,
            EventKind::PairDeath,
        ] {
            let s = serde_json::to_value(k).unwrap();
            assert_eq!(EventKind::parse(s.as_str().unwrap()).unwrap(), k);
        }
        assert!(EventKind::parse("nope").is_err());
    }

    #[test]
    fn empty_frames_write_index_only() {
        let dir = tempfile::tempdir().unwrap();
        let report = SweepReport {
            model: Model::Kerr { rho: 0.0 },
            params: PotentialParams::kerr(0.0),
            omega_values: vec![],
            points: vec![],
            events: vec![],
        };
        let files = emit_frames(&report, &[], dir.path()).unwrap();
        assert_eq!(files, vec![dir.path().join("index.json")]);
    }

    #[test]
    fn equal_counts_bracket_is_rejected() {
        let cfg = SpectralConfig {
            n: 128,
            ..Default::default()
        };
        let r = locate_bifurcation(
            &Model::Kerr { rho: 0.0 },
            (0.6, 0.7),
            EventKind::QuartetBirth,
            1e-2,
            &cfg,
        );
        assert!(matches!(r, Err(Error::Invalid(_))), "{r:?}");
    }
}
