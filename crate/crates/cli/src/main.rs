use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sif_core::angular::{check_ij_identity, gamma_lame, gamma_limit_study, gamma_stokes, mode_pair};
use sif_core::extraction::{Extractor, ProblemData};
use sif_core::fem::{norms, solve_problem, Norms};
use sif_core::geometry::{CornerFrame, Point};
use sif_core::harness::{emit, run_eps_sweep, run_manufactured, CsvTable, Format, RunConfig, SCHEMA};
use sif_core::spectral::{exponents_for, Family, MaterialParams};

#[derive(Parser)]
#[command(name = "sif-lab", version, about = "Corner singularity coefficients for penalized and Stokes problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// INI run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Lame,
    Stokes,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Lame => Family::Lame,
            FamilyArg::Stokes => Family::Stokes,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Primal,
    Dual,
}

/// Material and corner options shared by the closed-form commands.
#[derive(Args, Clone)]
struct Setup {
    #[arg(long, value_enum, default_value = "lame")]
    family: FamilyArg,
    /// Opening angle in units of pi (overrides the config domain)
    #[arg(long)]
    omega_pi: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Singular exponents of the corner
    Eigen(Setup),
    /// Evaluate a singular or dual mode along an arc r = const
    Mode {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, value_enum, default_value = "primal")]
        kind: KindArg,
        #[arg(long, default_value_t = 1)]
        index: usize,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        /// Number of angles across the corner
        #[arg(long, default_value_t = 17)]
        n: usize,
    },
    /// Normalizer gamma_i, or the eps -> 0 study when the config has an eps_grid
    Gamma {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 1)]
        index: usize,
    },
    /// Compare raw I + J with eps K on a theta grid
    IdentityCheck {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value_t = 1)]
        index: usize,
        #[arg(long, default_value_t = 720)]
        n: usize,
    },
    /// Finite element solve of the configured problem
    Solve,
    /// Coefficient extraction for the configured data
    Extract,
    /// Penalized-to-Stokes sweep over the configured eps_grid
    Sweep,
    /// Built-in manufactured recovery study
    Manufactured,
}

struct Ctx {
    cfg: Option<RunConfig>,
    out: Option<PathBuf>,
    format: Format,
}

impl Ctx {
    fn new(c: &Common) -> Result<Self> {
        let cfg = match &c.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                let cfg = RunConfig::from_ini(&text)?;
                cfg.validate()?;
                Some(cfg)
            }
            None => None,
        };
        let format = match c.format {
            Some(OutFormat::Csv) => Format::Csv,
            Some(OutFormat::Json) => Format::Json,
            None => cfg.as_ref().map_or(Format::Csv, |c| c.output.format),
        };
        let out = c.out.clone().or_else(|| cfg.as_ref().and_then(|c| c.output.path.clone()).map(PathBuf::from));
        Ok(Ctx { cfg, out, format })
    }

    fn config(&self) -> Result<&RunConfig> {
        self.cfg.as_ref().context("this command needs --config")
    }

    fn emit<T: CsvTable + Serialize + ?Sized>(&self, report: &T) -> Result<()> {
        Ok(emit(report, self.format, self.out.as_deref())?)
    }

    fn frame(&self, s: &Setup) -> Result<CornerFrame> {
        if let Some(w) = s.omega_pi {
            return Ok(CornerFrame::symmetric(w * PI));
        }
        Ok(match &self.cfg {
            Some(c) => c.polygon()?.frame(),
            None => CornerFrame::symmetric(1.5 * PI),
        })
    }

    fn material(&self, s: &Setup) -> Result<MaterialParams> {
        let mu = s.mu.or(self.cfg.as_ref().map(|c| c.material.mu)).unwrap_or(1.0);
        let eps = match Family::from(s.family) {
            Family::Stokes => 0.0,
            Family::Lame => s.eps.or(self.cfg.as_ref().and_then(|c| c.material.eps)).unwrap_or(1e-2),
        };
        Ok(MaterialParams::new(mu, eps)?)
    }
}

#[derive(Serialize)]
struct ModeRow {
    r: f64,
    theta: f64,
    x: f64,
    y: f64,
    ux: f64,
    uy: f64,
    /// eps^-1 div (Lame) or pressure (Stokes)
    scalar: f64,
}

#[derive(Serialize)]
struct ModeReport {
    schema: String,
    family: Family,
    index: usize,
    exponent: f64,
    rows: Vec<ModeRow>,
}

impl CsvTable for ModeReport {
    fn header(&self) -> Vec<String> {
        ["r", "theta", "x", "y", "ux", "uy", "scalar"].map(String::from).to_vec()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.rows.iter().map(|r| [r.r, r.theta, r.x, r.y, r.ux, r.uy, r.scalar].iter().map(|v| format!("{v:?}")).collect()).collect()
    }
}

#[derive(Serialize)]
struct NodeRow {
    x: f64,
    y: f64,
    ux: f64,
    uy: f64,
    p: f64,
}

#[derive(Serialize)]
struct SolveReport {
    schema: String,
    family: Family,
    mu: f64,
    eps: f64,
    mesh_id: String,
    elements: usize,
    norms: Norms,
    nodes: Vec<NodeRow>,
}

impl CsvTable for SolveReport {
    fn header(&self) -> Vec<String> {
        ["x", "y", "ux", "uy", "p"].map(String::from).to_vec()
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.nodes.iter().map(|n| [n.x, n.y, n.ux, n.uy, n.p].iter().map(|v| format!("{v:?}")).collect()).collect()
    }
}

/// Penalized when the config gives eps > 0, Stokes otherwise.
fn config_material(cfg: &RunConfig) -> Result<(Family, MaterialParams)> {
    let eps = cfg.material.eps.unwrap_or(0.0);
    let family = if eps > 0.0 { Family::Lame } else { Family::Stokes };
    Ok((family, MaterialParams::new(cfg.material.mu, eps)?))
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::new(&cli.common)?;
    match cli.command {
        Command::Eigen(s) => {
            let (frame, m) = (ctx.frame(&s)?, ctx.material(&s)?);
            ctx.emit(&exponents_for(s.family.into(), frame.omega(), &m)?)
        }
        Command::Mode { setup, kind, index, r, n } => {
            let (frame, m) = (ctx.frame(&setup)?, ctx.material(&setup)?);
            if n < 2 || !(r > 0.0) {
                bail!("need n >= 2 and r > 0");
            }
            let (p, d) = mode_pair(setup.family.into(), frame, &m, index)?;
            let mode = match kind {
                KindArg::Primal => p,
                KindArg::Dual => d,
            };
            let rows = (0..n)
                .map(|k| {
                    let th = frame.omega1 + frame.omega() * k as f64 / (n - 1) as f64;
                    let x: Point = [r * th.cos(), r * th.sin()];
                    let s = mode.at(x);
                    ModeRow { r, theta: th, x: x[0], y: x[1], ux: s.value[0], uy: s.value[1], scalar: s.scalar }
                })
                .collect();
            ctx.emit(&ModeReport { schema: SCHEMA.into(), family: mode.family, index, exponent: mode.lambda(), rows })
        }
        Command::Gamma { setup, index } => {
            let frame = ctx.frame(&setup)?;
            let grid = ctx.cfg.as_ref().and_then(|c| c.material.eps_grid);
            match (Family::from(setup.family), grid) {
                (Family::Lame, Some(g)) => {
                    let mu = setup.mu.unwrap_or(ctx.config()?.material.mu);
                    ctx.emit(&gamma_limit_study(index, mu, frame, &g.values())?)
                }
                (family, _) => {
                    let m = ctx.material(&setup)?;
                    let (p, d) = mode_pair(family, frame, &m, index)?;
                    let g = match family {
                        Family::Lame => gamma_lame(&m, &p, &d)?,
                        Family::Stokes => gamma_stokes(&p, &d)?,
                    };
                    ctx.emit(&g)
                }
            }
        }
        Command::IdentityCheck { setup, index, n } => {
            let (frame, m) = (ctx.frame(&setup)?, ctx.material(&setup)?);
            ctx.emit(&check_ij_identity(index, &m, frame, n)?)
        }
        Command::Solve => {
            let cfg = ctx.config()?;
            let (family, m) = config_material(cfg)?;
            let space = cfg.space()?;
            let data: ProblemData = cfg.problem_data()?;
            let f = |x: Point| data.f.eval(x);
            let zeta = data.zeta.clone();
            let z = move |x: Point| zeta.as_ref().map_or(0.0, |z| z.eval(x));
            let g = |tag: usize, x: Point| Some(data.g.eval(tag, x));
            let zref: Option<&(dyn Fn(Point) -> f64 + Sync)> = data.zeta.is_some().then_some(&z);
            let u = solve_problem(&space, m, Some(&f), zref, &g)?;
            let nodes = space
                .nodes
                .iter()
                .zip(&u.velocity)
                .map(|(x, v)| {
                    let p = u.eval_point(*x).map_or(f64::NAN, |(_, p)| p);
                    NodeRow { x: x[0], y: x[1], ux: v[0], uy: v[1], p }
                })
                .collect();
            ctx.emit(&SolveReport {
                schema: SCHEMA.into(),
                family,
                mu: m.mu,
                eps: m.eps,
                mesh_id: space.mesh.id(),
                elements: space.num_elems(),
                norms: norms(&u),
                nodes,
            })
        }
        Command::Extract => {
            let cfg = ctx.config()?;
            let (family, m) = config_material(cfg)?;
            let rep = Extractor::new(family, cfg.space()?, m)?.extract(&cfg.problem_data()?)?;
            ctx.emit(&rep)
        }
        Command::Sweep => ctx.emit(&run_eps_sweep(ctx.config()?)?),
        Command::Manufactured => ctx.emit(&run_manufactured(ctx.config()?)?),
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("sif-lab: {e:#}");
        std::process::exit(1);
    }
}
