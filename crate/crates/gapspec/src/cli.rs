//! Command-line front end. Configuration comes from an optional JSON file;
//! flags given on the command line override the file.

use crate::bifurcation::{emit_frames, locate_bifurcation, refine_events, sweep, EventKind};
use crate::potential::PotentialParams;
use crate::soliton::{classify_existence, conserved_quantities, ode_residual, Model};
use crate::spectral_grid::{halfwidth_auto, stretch_auto, ChebGrid};
use crate::spectrum::{analyze, direct_check, SpectralConfig};
use crate::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Halfwidth factor for profile output (L = 20/β, clamped).
const PROFILE_LFAC: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Kerr,
    Grating,
    General,
}

/// Everything a run needs besides the subcommand arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `{"kerr": {"rho": 0}}`, `{"grating": {"s": 0}}` or `{"general": {"a1": …, "a4": …}}`.
    pub model: Model,
    pub spectral: SpectralConfig,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    /// Bisection stops once the ω bracket is narrower than this.
    pub tol_omega: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Model::Kerr { rho: 0.0 },
            spectral: SpectralConfig::default(),
            format: Format::Csv,
            out: None,
            jobs: None,
            tol_omega: 1e-3,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.params().validate()?;
        if self.model.params().is_zero() {
            return Err(Error::Invalid("all potential coefficients are zero".into()));
        }
        self.spectral.validate()?;
        if !(self.tol_omega > 0.0) {
            return Err(Error::Invalid("tol_omega must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Invalid("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gapspec",
    version,
    about = "Gap solitons and the spectra of their linearizations"
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub model: Option<ModelName>,
    /// Cross-phase coefficient of the kerr model.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    /// Coefficient a4 of the grating model.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s: Option<f64>,
    /// Coefficients a1 a2 a3 a4 of a general quadric potential.
    #[arg(long, num_args = 4, global = true, allow_hyphen_values = true, value_names = ["A1", "A2", "A3", "A4"])]
    pub a: Option<Vec<f64>>,
    #[arg(long = "n-points", global = true)]
    pub n_points: Option<usize>,
    #[arg(long, global = true)]
    pub halfwidth: Option<f64>,
    /// Worker threads for sweeps (falls back to GAPSPEC_JOBS).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Existence domain of decaying solitons.
    Exists,
    /// Sampled profile with ODE residual and conserved quantities.
    Soliton {
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
    },
    /// Classified spectra of L, H+ and H− at one ω.
    Spectrum {
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
        /// Also solve the full L eigenproblem and cross-check γ = −λ².
        #[arg(long)]
        direct: bool,
    },
    /// Counts and events over a decreasing ω grid.
    Sweep {
        #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["LO", "HI"])]
        range: Vec<f64>,
        #[arg(long)]
        steps: usize,
        /// Bisect every detected event.
        #[arg(long)]
        refine: bool,
        /// Write per-ω eigenvalue frames (requires --out).
        #[arg(long)]
        frames: bool,
    },
    /// Bisection of a count change inside a bracket.
    Bifurcate {
        #[arg(long, num_args = 2, allow_hyphen_values = true, value_names = ["LO", "HI"])]
        range: Vec<f64>,
        /// quartet_birth, quartet_death, edge_bifurcation_Hplus, edge_bifurcation_Hminus, pair_birth, pair_death
        #[arg(long)]
        kind: String,
        #[arg(long)]
        tol: Option<f64>,
    },
}

/// Merges file and flags. `env_jobs` is the value of GAPSPEC_JOBS, if set.
pub fn resolve_config(cli: &Cli, env_jobs: Option<&str>) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let model_flags = cli.rho.is_some() || cli.s.is_some() || cli.a.is_some();
    if cli.model.is_some() || model_flags {
        let name = cli.model.unwrap_or(if cli.a.is_some() {
            ModelName::General
        } else if cli.s.is_some() {
            ModelName::Grating
        } else {
            ModelName::Kerr
        });
        cfg.model = match name {
            ModelName::Kerr => Model::Kerr {
                rho: cli.rho.unwrap_or(0.0),
            },
            ModelName::Grating => Model::Grating {
                s: cli.s.unwrap_or(0.0),
            },
            ModelName::General => {
                let a = cli.a.as_ref().ok_or_else(|| {
                    Error::Invalid("--model general needs --a A1 A2 A3 A4".into())
                })?;
                Model::General(PotentialParams::new(a[0], a[1], a[2], a[3])?)
            }
        };
    }
    if let Some(n) = cli.n_points {
        cfg.spectral.n = n;
    }
    if let Some(l) = cli.halfwidth {
        cfg.spectral.halfwidth = Some(l);
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = Some(j);
    } else if cfg.jobs.is_none() {
        if let Some(s) = env_jobs {
            let j = s
                .trim()
                .parse()
                .map_err(|_| Error::Invalid(format!("GAPSPEC_JOBS={s:?} is not a count")))?;
            cfg.jobs = Some(j);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Rounds every float in a JSON tree to 15 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r: f64 = format!("{x:.14e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(r)
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn json_text<T: Serialize>(x: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&round_json(serde_json::to_value(x)?))? + "\n")
}

/// Sends `content` to `out/name`, or to stdout when no directory is configured.
fn emit(cfg: &RunConfig, name: &str, content: &str, stdout: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join(name), content)?;
        }
        None => stdout.write_all(content.as_bytes())?,
    }
    Ok(())
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is ascii"))
}

fn range_pair(r: &[f64]) -> Result<(f64, f64)> {
    match r {
        [a, b] => Ok((a.min(*b), a.max(*b))),
        _ => Err(Error::Invalid("--range takes LO HI".into())),
    }
}

pub fn run(cli: &Cli, cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Exists => cmd_exists(cfg, stdout),
        Command::Soliton { omega } => cmd_soliton(cfg, *omega, stdout),
        Command::Spectrum { omega, direct } => cmd_spectrum(cfg, *omega, *direct, stdout),
        Command::Sweep {
            range,
            steps,
            refine,
            frames,
        } => {
            let (lo, hi) = range_pair(range)?;
            cmd_sweep(cfg, lo, hi, *steps, *refine, *frames, stdout)
        }
        Command::Bifurcate { range, kind, tol } => {
            let (lo, hi) = range_pair(range)?;
            cmd_bifurcate(
                cfg,
                (lo, hi),
                EventKind::parse(kind)?,
                tol.unwrap_or(cfg.tol_omega),
                stdout,
            )
        }
    }
}

pub fn cmd_exists(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let rep = classify_existence(&cfg.model.params())?;
    match cfg.format {
        Format::Json => {
            let v =
                json!({ "params": cfg.model.params(), "summary": rep.summary(), "report": rep });
            emit(cfg, "exists.json", &json_text(&v)?, stdout)
        }
        Format::Csv => {
            let mut s = String::from("lo,hi,branch,lo_behavior,hi_behavior\n");
            for d in &rep.omega_domain {
                s.push_str(&format!(
                    "{:.15e},{:.15e},{:?},{:?},{:?}\n",
                    d.lo, d.hi, d.branch, d.lo_behavior, d.hi_behavior
                ));
            }
            emit(cfg, "exists.csv", &s, stdout)?;
            writeln!(stdout, "{}", rep.summary())?;
            Ok(())
        }
    }
}

fn profile_grid(cfg: &RunConfig, omega: f64) -> Result<ChebGrid> {
    let l = cfg
        .spectral
        .halfwidth
        .unwrap_or_else(|| halfwidth_auto(omega, PROFILE_LFAC));
    ChebGrid::build_stretched(cfg.spectral.n, l, stretch_auto(omega, l))
}

pub fn cmd_soliton(cfg: &RunConfig, omega: f64, stdout: &mut dyn Write) -> Result<()> {
    cfg.model.admissible(omega)?;
    let grid = profile_grid(cfg, omega)?;
    let prof = cfg.model.profile(grid.nodes(), omega)?;
    let p = cfg.model.params();
    let residual = ode_residual(&prof, &grid, &p)?;
    let cons = conserved_quantities(&prof, &grid, &p)?;
    match cfg.format {
        Format::Json => {
            let v = json!({
                "omega": omega,
                "params": p,
                "n": grid.degree(),
                "halfwidth": grid.halfwidth(),
                "ode_residual": residual,
                "conserved": cons,
                "profile": prof,
            });
            emit(cfg, "soliton.json", &json_text(&v)?, stdout)
        }
        Format::Csv => {
            let summary = format!(
                "key,value\nomega,{omega:.15e}\nbranch,{:?}\nsource,{:?}\nn,{}\nhalfwidth,{:.15e}\node_residual,{residual:.15e}\nq_total,{:.15e}\np,{:.15e}\nh,{:.15e}\nlambda,{:.15e}\nboundary_max,{:.15e}\n",
                prof.branch, prof.source, grid.degree(), grid.halfwidth(), cons.q_total, cons.p, cons.h, cons.lambda, cons.boundary_max
            );
            let profile = csv_string(|b| prof.write_csv(b))?;
            if cfg.out.is_some() {
                emit(cfg, "soliton_summary.csv", &summary, stdout)?;
                emit(cfg, "soliton_profile.csv", &profile, stdout)
            } else {
                emit(cfg, "", &format!("{summary}\n{profile}"), stdout)
            }
        }
    }
}

pub fn cmd_spectrum(
    cfg: &RunConfig,
    omega: f64,
    direct: bool,
    stdout: &mut dyn Write,
) -> Result<()> {
    cfg.model.admissible(omega)?;
    let a = analyze(&cfg.model, omega, &cfg.spectral)?;
    let check = if direct {
        Some(direct_check(
            &cfg.model,
            omega,
            &cfg.spectral.grid(omega)?,
            &cfg.spectral.tol,
        )?)
    } else {
        None
    };
    match cfg.format {
        Format::Json => {
            let v = json!({
                "omega": omega,
                "params": cfg.model.params(),
                "counts": a.counts,
                "unfiltered_counts": a.raw_counts,
                "L": a.l,
                "Hplus": a.hplus,
                "Hminus": a.hminus,
                "direct": check,
            });
            emit(cfg, "spectrum.json", &json_text(&v)?, stdout)
        }
        Format::Csv => {
            let mut s = String::from("operator,re,im,class\n");
            for spec in [&a.l, &a.hplus, &a.hminus] {
                for (z, c) in spec.labelled() {
                    s.push_str(&format!(
                        "{},{:.15e},{:.15e},{}\n",
                        spec.operator.name(),
                        z.re,
                        z.im,
                        c
                    ));
                }
            }
            emit(cfg, "spectrum.csv", &s, stdout)?;
            let c = a.counts;
            writeln!(
                stdout,
                "omega={omega:.15e} L_imag_pairs={} L_real_pairs={} L_quartets={} Hplus={} Hminus={}",
                c.l_imag_pairs, c.l_real_pairs, c.l_quartets, c.hplus, c.hminus
            )?;
            if let Some(ch) = check {
                writeln!(
                    stdout,
                    "gamma_crosscheck matches={} outliers={}",
                    ch.gamma.matches.len(),
                    ch.gamma.outliers.len()
                )?;
            }
            Ok(())
        }
    }
}

pub fn cmd_sweep(
    cfg: &RunConfig,
    lo: f64,
    hi: f64,
    steps: usize,
    refine: bool,
    frames: bool,
    stdout: &mut dyn Write,
) -> Result<()> {
    if frames && cfg.out.is_none() {
        return Err(Error::Invalid("--frames needs --out".into()));
    }
    let mut sw = sweep(&cfg.model, lo, hi, steps, &cfg.spectral, cfg.jobs)?;
    if refine {
        refine_events(&mut sw.report, cfg.tol_omega, &cfg.spectral)?;
    }
    if frames {
        if let Some(dir) = &cfg.out {
            emit_frames(&sw.report, &sw.analyses, &dir.join("frames"))?;
        }
    }
    match cfg.format {
        Format::Json => emit(cfg, "sweep.json", &json_text(&sw.report)?, stdout),
        Format::Csv => {
            emit(
                cfg,
                "sweep.csv",
                &csv_string(|b| sw.report.write_csv(b))?,
                stdout,
            )?;
            for e in &sw.report.events {
                let r = e
                    .refined_omega
                    .map(|r| format!(" refined={r:.15e}"))
                    .unwrap_or_default();
                writeln!(
                    stdout,
                    "event {:?} in ({:.15e}, {:.15e}) {} -> {}{r}",
                    e.kind, e.omega_bracket.0, e.omega_bracket.1, e.before, e.after
                )?;
            }
            Ok(())
        }
    }
}

pub fn cmd_bifurcate(
    cfg: &RunConfig,
    bracket: (f64, f64),
    kind: EventKind,
    tol: f64,
    stdout: &mut dyn Write,
) -> Result<()> {
    let w = locate_bifurcation(&cfg.model, bracket, kind, tol, &cfg.spectral)?;
    let v =
        json!({ "kind": kind, "bracket": [bracket.0, bracket.1], "tol_omega": tol, "omega": w });
    match cfg.format {
        Format::Json => emit(cfg, "bifurcation.json", &json_text(&v)?, stdout),
        Format::Csv => emit(
            cfg,
            "bifurcation.csv",
            &format!(
                "kind,lo,hi,tol_omega,omega\n{},{:.15e},{:.15e},{:.15e},{:.15e}\n",
                v["kind"].as_str().unwrap_or(""),
                bracket.0,
                bracket.1,
                tol,
                w
            ),
            stdout,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("gapspec").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig {
            model: Model::General(PotentialParams::new(1.0, 0.5, -0.25, 2.0).unwrap()),
            jobs: Some(3),
            out: Some("x".into()),
            format: Format::Json,
            ..Default::default()
        };
        let s = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cfg);
        let partial: RunConfig =
            serde_json::from_str(r#"{"model":{"grating":{"s":0.5}}}"#).unwrap();
        assert_eq!(partial.model, Model::Grating { s: 0.5 });
        assert_eq!(partial.spectral, SpectralConfig::default());
    }

    #[test]
    fn flags_override_file_and_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(
            &path,
            r#"{"model":{"grating":{"s":0.0}},"jobs":2,"spectral":{"n":64}}"#,
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let cfg = resolve_config(&parse(&["--config", p, "exists"]), Some("7")).unwrap();
        assert_eq!(cfg.jobs, Some(2));
        assert_eq!(cfg.spectral.n, 64);
        let cfg = resolve_config(
            &parse(&["--config", p, "--n-points", "96", "--rho", "0.5", "exists"]),
            None,
        )
        .unwrap();
        assert_eq!(cfg.model, Model::Kerr { rho: 0.5 });
        assert_eq!(cfg.spectral.n, 96);
        let cfg = resolve_config(&parse(&["exists"]), Some("5")).unwrap();
        assert_eq!(cfg.jobs, Some(5));
        assert!(resolve_config(&parse(&["exists"]), Some("many")).is_err());
        assert!(resolve_config(&parse(&["--n-points", "4", "exists"]), None).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn rounding_keeps_15_digits() {
        let v = round_json(json!({"x": [std::f64::consts::PI, 1.0], "n": 3}));
        assert_eq!(v["x"][0].as_f64().unwrap(), 3.14159265358979);
        assert_eq!(v["n"], 3);
    }

    #[test]
    fn exists_output() {
        let cfg = resolve_config(&parse(&["--model", "kerr", "exists"]), None).unwrap();
        let mut out = Vec::new();
        cmd_exists(&cfg, &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.contains("case A2, Q+ on (-1, 1)"), "{s}");
        let e = resolve_config(&parse(&["--a", "0", "0", "0", "0", "exists"]), None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
