//! `spectra`: command-line front end to spectra-core.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spectra_core::locus::trace_locus;
use spectra_core::placement::place_zeros;
use spectra_core::regions::{
    annulus_report, gerschgorin, k_interval, strip_test, AnnulusBucket, StarRegion,
};
use spectra_core::sensitivity::dkappa;
use spectra_core::valuation::{dpi_probe, simulate, DpiConfig};
use spectra_core::{
    label_roots, parse_system, CanonicalSystem, Coordinate, Error, InitialState, Mode, Polynomial,
};

use output::{emit, float, json, Table};

#[derive(Parser)]
#[command(
    name = "spectra",
    version,
    about = "Eigenvalue location tools for bordered diagonal systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Labeled eigenvalues of the system.
    Eig(Common),
    /// Root locus along one policy coordinate.
    Locus {
        #[command(flatten)]
        common: Common,
        /// Coordinate to vary: omegaK (one-based) or beta.
        #[arg(long)]
        param: String,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Policy whose characteristic polynomial is the target.
    Place {
        #[command(flatten)]
        common: Common,
        /// Monic target coefficients, highest degree first, as a JSON array.
        #[arg(long)]
        target: String,
    },
    /// Per-root containment report.
    Regions {
        #[command(flatten)]
        common: Common,
        /// Star-region epsilon; defaults to sum |omega_j delta_j|.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Eigenvalue sensitivities at the real labeled roots.
    Sens(Common),
    /// Dividend-policy irrelevance probe.
    Dpi {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        init: Init,
        #[arg(long)]
        rate: f64,
        #[arg(long, default_value_t = 0.01)]
        radius: f64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Continuous-time discounting.
        #[arg(long)]
        continuous: bool,
    },
    /// Forward simulation of the state.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        init: Init,
        #[arg(long)]
        horizon: usize,
    },
}

#[derive(Args)]
struct Common {
    /// System descriptor (JSON).
    #[arg(long)]
    system: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Seed for sampling commands.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Init {
    /// Initial accounting state as a JSON array; zeros when absent.
    #[arg(long)]
    z0: Option<String>,
    /// Initial dividend.
    #[arg(long, default_value_t = 1.0)]
    d0: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_validation() { 2 } else { 3 },
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        kind: "InvalidInput",
        message: message.into(),
    }
}

fn load(common: &Common) -> Result<CanonicalSystem, Failure> {
    let text = std::fs::read_to_string(&common.system)
        .map_err(|e| invalid(format!("cannot read {}: {e}", common.system.display())))?;
    Ok(parse_system(&text)?)
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    serde_json::from_str(text)
        .map_err(|e| invalid(format!("{what} must be a JSON array of numbers: {e}")))
}

fn initial_state(init: &Init, n: usize) -> Result<InitialState, Failure> {
    let z0 = match &init.z0 {
        Some(text) => parse_floats(text, "--z0")?,
        None => vec![0.0; n],
    };
    Ok(InitialState::new(z0, init.d0)?)
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

fn opt_bool_cell(b: Option<bool>) -> String {
    b.map(bool_cell).unwrap_or_default()
}

#[derive(Serialize)]
struct RootRow {
    index: usize,
    re: f64,
    im: f64,
    is_real: bool,
}

fn eig(common: &Common) -> Result<String, Failure> {
    let sys = load(common)?;
    let lab = label_roots(&sys, None)?;
    let rows: Vec<RootRow> = lab
        .roots
        .iter()
        .zip(&lab.is_real)
        .enumerate()
        .map(|(i, (z, &r))| RootRow {
            index: i + 1,
            re: z.re,
            im: z.im,
            is_real: r,
        })
        .collect();
    Ok(match common.format {
        Format::Json => json(&serde_json::json!({ "roots": rows })),
        Format::Csv => {
            let mut t = Table::new(["index", "re", "im", "is_real"]);
            for r in rows {
                t.push(vec![
                    r.index.to_string(),
                    float(r.re),
                    float(r.im),
                    bool_cell(r.is_real),
                ]);
            }
            t.render()
        }
    })
}

fn locus(
    common: &Common,
    param: &str,
    lo: f64,
    hi: f64,
    samples: usize,
) -> Result<String, Failure> {
    let coord: Coordinate = param.parse()?;
    let sys = load(common)?;
    if let Coordinate::Omega(k) = coord {
        if k >= sys.n() {
            return Err(invalid(format!("{coord} out of range for n = {}", sys.n())));
        }
    }
    let trace = trace_locus(&sys, coord, lo, hi, samples)?;
    Ok(match common.format {
        Format::Json => {
            let rows: Vec<_> = trace
                .rows()
                .map(|(p, i, re, im, r)| serde_json::json!({ "param": p, "index": i, "re": re, "im": im, "is_real": r }))
                .collect();
            json(&serde_json::json!({
                "coordinate": coord.to_string(),
                "rows": rows,
                "events": trace.events,
            }))
        }
        Format::Csv => {
            let mut t = Table::new(["param", "index", "re", "im", "is_real"]);
            for (p, i, re, im, r) in trace.rows() {
                t.push(vec![
                    float(p),
                    i.to_string(),
                    float(re),
                    float(im),
                    bool_cell(r),
                ]);
            }
            t.render()
        }
    })
}

fn place(common: &Common, target: &str) -> Result<String, Failure> {
    let coeffs = parse_floats(target, "--target")?;
    let sys = load(common)?;
    let placed = place_zeros(sys.spectrum(), sys.signs(), &Polynomial::new(coeffs)?)?;
    Ok(match common.format {
        Format::Json => json(&placed),
        Format::Csv => {
            let mut t = Table::new(["coordinate", "value"]);
            for (k, w) in placed.policy.omegas.iter().enumerate() {
                t.push(vec![Coordinate::Omega(k).to_string(), float(*w)]);
            }
            t.push(vec![
                Coordinate::Beta.to_string(),
                float(placed.policy.beta),
            ]);
            t.push(vec!["residual".into(), float(placed.residual)]);
            t.render()
        }
    })
}

#[derive(Serialize)]
struct RegionRow {
    index: usize,
    re: f64,
    im: f64,
    strip: Option<bool>,
    star: bool,
    gerschgorin_rows: bool,
    gerschgorin_columns: bool,
    annulus: Option<AnnulusBucket>,
}

fn regions(common: &Common, epsilon: Option<f64>) -> Result<String, Failure> {
    let sys = load(common)?;
    let lab = label_roots(&sys, None)?;
    let l = sys.lambdas();
    let eps = epsilon.unwrap_or_else(|| sys.weights().iter().map(|w| w.abs()).sum());
    let star = StarRegion::new(k_interval(sys.beta(), l[0], eps)?, sys.n() + 1);
    let strip = strip_test(&lab.roots, sys.beta(), l[0]);
    let discs = gerschgorin(&sys);
    let annulus = if l.len() >= 2 {
        Some(annulus_report(&lab.roots, l[1], l[0])?.buckets)
    } else {
        None
    };
    let rows: Vec<RegionRow> = lab
        .roots
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let m = discs.membership(z);
            RegionRow {
                index: i + 1,
                re: z.re,
                im: z.im,
                strip: strip[i],
                star: star.contains(z),
                gerschgorin_rows: m.rows,
                gerschgorin_columns: m.columns,
                annulus: annulus.as_ref().map(|b| b[i]),
            }
        })
        .collect();
    Ok(match common.format {
        Format::Json => json(&serde_json::json!({ "epsilon": eps, "roots": rows })),
        Format::Csv => {
            let mut t = Table::new([
                "index",
                "re",
                "im",
                "strip",
                "star",
                "gerschgorin_rows",
                "gerschgorin_columns",
                "annulus",
            ]);
            for r in rows {
                t.push(vec![
                    r.index.to_string(),
                    float(r.re),
                    float(r.im),
                    opt_bool_cell(r.strip),
                    bool_cell(r.star),
                    bool_cell(r.gerschgorin_rows),
                    bool_cell(r.gerschgorin_columns),
                    r.annulus.map(|b| format!("{b:?}")).unwrap_or_default(),
                ]);
            }
            t.render()
        }
    })
}

fn sens(common: &Common) -> Result<String, Failure> {
    let sys = load(common)?;
    let lab = label_roots(&sys, None)?;
    let m = dkappa(&sys, &lab)?;
    let n = sys.n();
    let coord = |k: usize| {
        if k < n {
            Coordinate::Omega(k)
        } else {
            Coordinate::Beta
        }
    };
    Ok(match common.format {
        Format::Json => {
            let rows: Vec<_> = (0..=n)
                .map(|h| {
                    serde_json::json!({
                        "root": h + 1,
                        "values": (0..=n).map(|k| m.get(h, k)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let columns: Vec<String> = (0..=n).map(|k| coord(k).to_string()).collect();
            json(&serde_json::json!({ "columns": columns, "rows": rows }))
        }
        Format::Csv => {
            let mut t = Table::new(["root", "coordinate", "value", "valid"]);
            for h in 0..=n {
                for k in 0..=n {
                    let v = m.get(h, k);
                    t.push(vec![
                        (h + 1).to_string(),
                        coord(k).to_string(),
                        v.map(float).unwrap_or_default(),
                        bool_cell(v.is_some()),
                    ]);
                }
            }
            t.render()
        }
    })
}

fn dpi(
    common: &Common,
    init: &Init,
    rate: f64,
    radius: f64,
    samples: usize,
    continuous: bool,
) -> Result<String, Failure> {
    let sys = load(common)?;
    let init = initial_state(init, sys.n())?;
    let config = DpiConfig {
        rate,
        radius,
        samples,
        seed: common.seed.unwrap_or(0),
        mode: if continuous {
            Mode::Continuous
        } else {
            Mode::Discrete
        },
    };
    let rep = dpi_probe(&sys, &init, &config)?;
    Ok(match common.format {
        Format::Json => json(&rep),
        Format::Csv => {
            let n = sys.n();
            let mut header: Vec<String> = vec!["sample".into()];
            header.extend((0..n).map(|k| Coordinate::Omega(k).to_string()));
            header.extend(["beta".into(), "p0".into(), "accepted".into()]);
            let mut t = Table::new(header);
            for (i, s) in rep.samples.iter().enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(s.policy.omegas.iter().map(|&w| float(w)));
                row.push(float(s.policy.beta));
                row.push(s.p0.map(float).unwrap_or_default());
                row.push(bool_cell(s.p0.is_some()));
                t.push(row);
            }
            t.render()
        }
    })
}

fn run_simulation(common: &Common, init: &Init, horizon: usize) -> Result<String, Failure> {
    let sys = load(common)?;
    let init = initial_state(init, sys.n())?;
    let traj = simulate(&sys, &init, horizon)?;
    Ok(match common.format {
        Format::Json => json(&traj),
        Format::Csv => {
            let n = sys.n();
            let mut header: Vec<String> = vec!["t".into()];
            header.extend((1..=n).map(|k| format!("z{k}")));
            header.push("d".into());
            let mut t = Table::new(header);
            for (step, z) in traj.states.iter().enumerate() {
                let mut row = vec![step.to_string()];
                row.extend(z.iter().map(|&x| float(x)));
                t.push(row);
            }
            t.render()
        }
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (common, text) = match &cli.command {
        Command::Eig(c) => (c, eig(c)?),
        Command::Locus {
            common,
            param,
            lo,
            hi,
            samples,
        } => (common, locus(common, param, *lo, *hi, *samples)?),
        Command::Place { common, target } => (common, place(common, target)?),
        Command::Regions { common, epsilon } => (common, regions(common, *epsilon)?),
        Command::Sens(c) => (c, sens(c)?),
        Command::Dpi {
            common,
            init,
            rate,
            radius,
            samples,
            continuous,
        } => (
            common,
            dpi(common, init, *rate, *radius, *samples, *continuous)?,
        ),
        Command::Simulate {
            common,
            init,
            horizon,
        } => (common, run_simulation(common, init, *horizon)?),
    };
    emit(&text, common.out.as_deref()).map_err(|e| Failure {
        code: 3,
        kind: "Io",
        message: e.to_string(),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let body =
                serde_json::json!({ "error": f.kind, "message": f.message, "exit_code": f.code });
            eprintln!("{body}");
            ExitCode::from(f.code)
        }
    }
}
