//! gme-lab: bound curves, witness values, noise thresholds, fidelity bounds, tomography
//! and the verification report, as CSV or JSON tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use gme_core::bounds::{bound_curve, spoofing_curve};
use gme_core::fidelity::{closed_form_l0, fidelity_curve, ideal_max, numeric_l_eps, FidelityBoundQuery};
use gme_core::inm::I43_BISEP_LITERATURE;
use gme_core::io::{
    bound_table, fidelity_table, fixtures, fmt_num, fmt_opt, parse_grid, robustness_table, spoof_table, Format,
    Table,
};
use gme_core::linalg::expectation;
use gme_core::measurement::ImprecisionBudget;
use gme_core::robustness::{
    di_thresholds, robustness_sweep, threshold_visibility, MeasurementCase, ThresholdQuery,
};
use gme_core::states::{apply_noise, named_state, NoiseKind, NoiseModel};
use gme_core::tomography::CountTable;
use gme_core::verify::{criteria, laboratory_budget, report_table};
use gme_core::witness::{eval_from_correlators, CorrelatorFixture, WitnessKind};
use gme_core::GmeError;

/// Anchor fractions of the ideal maximum whose worst tilts seed a fidelity curve.
const CURVE_ANCHORS: [f64; 3] = [0.7, 0.9, 0.95];

#[derive(Parser)]
#[command(name = "gme-lab", version, about = "Entanglement witnesses under imprecise measurements")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
    /// Master seed for every randomized search.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads for the parallel maps; output does not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Corrected bound curves for one witness.
    Bound {
        #[arg(long)]
        witness: String,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        eps: EpsArgs,
    },
    /// Witness value on a named state, or from a correlator fixture with its error.
    Witness {
        #[arg(long, required_unless_present = "fixture")]
        state: Option<String>,
        #[arg(long)]
        witness: Option<String>,
        /// kind:p, e.g. dephasing:0.5
        #[arg(long)]
        noise: Option<NoiseModel>,
        /// Uniform imprecision on every basis of every party.
        #[arg(long)]
        eps: Option<f64>,
        /// Correlator file, or the name of a bundled fixture.
        #[arg(long, conflicts_with_all = ["state", "noise", "eps"])]
        fixture: Option<String>,
    },
    /// Mermin value of the spoofing state next to the corrected and ideal bounds.
    Spoof {
        #[arg(long, default_value = "0:0.1:21")]
        eps_grid: String,
    },
    /// Visibility thresholds, or a sweep over visibilities with --p-grid.
    Robustness {
        #[arg(long, default_value = "mermin4")]
        witness: String,
        #[command(flatten)]
        eps: EpsArgs,
        /// depolarizing or dephasing; both when absent.
        #[arg(long)]
        noise: Option<String>,
        /// best or worst; both when absent.
        #[arg(long)]
        case: Option<MeasurementCase>,
        #[arg(long)]
        p_grid: Option<String>,
    },
    /// Lower bounds on the GHZ fidelity from an observed witness value.
    Fidelity {
        #[arg(long)]
        witness: String,
        #[arg(long, required_unless_present = "w_grid")]
        observed: Option<f64>,
        /// Fractions of the ideal maximum, start:stop:count.
        #[arg(long, conflicts_with = "observed")]
        w_grid: Option<String>,
        /// Uniform imprecision; the laboratory budget when absent.
        #[arg(long, conflicts_with = "eps_xyz")]
        eps: Option<f64>,
        /// Per-basis imprecision x,y,z shared by all parties.
        #[arg(long)]
        eps_xyz: Option<String>,
    },
    /// Projector fidelities from a tomography count table.
    Tomo {
        #[arg(long)]
        counts: PathBuf,
    },
    /// Dephasing thresholds of the device-independent I_4m witnesses.
    Inm {
        #[arg(long, default_value_t = 3)]
        m: usize,
        /// Biseparable bound of I_43; an external input.
        #[arg(long, default_value_t = I43_BISEP_LITERATURE)]
        i43_bound: f64,
    },
    /// Run the acceptance checks; exit status 1 when any fails.
    Verify {
        /// Restrict to these criteria.
        #[arg(long, value_delimiter = ',')]
        criterion: Vec<u8>,
    },
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct EpsArgs {
    #[arg(long)]
    eps: Option<f64>,
    /// start:stop:count, endpoints included.
    #[arg(long)]
    eps_grid: Option<String>,
}

impl EpsArgs {
    fn grid(&self, default: f64) -> Result<Vec<f64>> {
        Ok(match (&self.eps, &self.eps_grid) {
            (Some(e), _) => vec![*e],
            (None, Some(g)) => parse_grid(g)?,
            (None, None) => vec![default],
        })
    }
}

fn witness_kind(label: &str, n: Option<usize>) -> Result<WitnessKind> {
    let bare = !label.chars().any(|c| c.is_ascii_digit());
    let kind: WitnessKind = match (bare, n) {
        (true, Some(n)) if matches!(label.to_ascii_lowercase().as_str(), "mermin" | "stabilizer") => {
            format!("{label}{n}").parse()?
        }
        _ => label.parse()?,
    };
    if let Some(n) = n {
        if n != kind.n() {
            bail!("witness {kind} acts on {} qubits, not {n}", kind.n());
        }
    }
    Ok(kind)
}

fn load_fixture(name: &str) -> Result<CorrelatorFixture> {
    let path = Path::new(name);
    let text = if path.exists() {
        fs::read_to_string(path).with_context(|| format!("reading {name}"))?
    } else {
        match path.file_name().and_then(|f| f.to_str()) {
            Some("fig4_mermin.json") => fixtures::FIG4_MERMIN.to_string(),
            Some("fig4_stabilizer.json") => fixtures::FIG4_STABILIZER.to_string(),
            _ => bail!("fixture {name} not found"),
        }
    };
    CorrelatorFixture::from_json(&text).with_context(|| format!("fixture {name}"))
}

fn cmd_bound(witness: &str, n: Option<usize>, eps: &EpsArgs) -> Result<Table> {
    let kind = witness_kind(witness, n)?;
    Ok(bound_table(&bound_curve(kind, &eps.grid(0.0)?)?))
}

fn cmd_witness(
    state: Option<&str>,
    witness: Option<&str>,
    noise: Option<NoiseModel>,
    eps: Option<f64>,
    fixture: Option<&str>,
) -> Result<Table> {
    let mut t = Table::new(&["witness", "source", "value", "std"]);
    if let Some(name) = fixture {
        let f = load_fixture(name)?;
        let kind = f.kind()?;
        if let Some(w) = witness {
            let asked = witness_kind(w, None)?;
            if asked != kind {
                bail!("fixture {name} holds {kind} correlators, not {asked}");
            }
        }
        let (value, std) = eval_from_correlators(&kind.ideal()?, &f.records)?;
        t.push(vec![kind.label(), name.to_string(), fmt_num(value), fmt_num(std)]);
        return Ok(t);
    }
    let label = state.ok_or_else(|| anyhow!("--state or --fixture is required"))?;
    let psi = named_state(label)?;
    let kind = match witness {
        Some(w) => witness_kind(w, None)?,
        None => bail!("--witness is required with --state"),
    };
    if kind.n() != psi.n_qubits() {
        return Err(GmeError::DimensionMismatch {
            expected: kind.n(),
            actual: psi.n_qubits(),
        }
        .into());
    }
    let spec = match eps {
        Some(e) => kind.tilted(&ImprecisionBudget::uniform(kind.n(), [e; 3])?)?,
        None => kind.ideal()?,
    };
    let (value, source) = match noise {
        Some(m) => (
            expectation(&spec.matrix, &apply_noise(&psi, m)?)?,
            format!("{label} {}:{}", m.kind, fmt_num(m.p)),
        ),
        None => (expectation(&spec.matrix, &psi)?, label.to_string()),
    };
    t.push(vec![spec.name, source, fmt_num(value), String::new()]);
    Ok(t)
}

fn cmd_robustness(
    witness: &str,
    eps: &EpsArgs,
    noise: Option<&str>,
    case: Option<MeasurementCase>,
    p_grid: Option<&str>,
) -> Result<Table> {
    let kind = witness_kind(witness, None)?;
    let noises: Vec<NoiseKind> = match noise {
        // a visibility suffix is accepted and ignored
        Some(s) => vec![s.split(':').next().unwrap_or(s).parse()?],
        None => vec![NoiseKind::Depolarizing, NoiseKind::Dephasing],
    };
    let cases = match case {
        Some(c) => vec![c],
        None => vec![MeasurementCase::BestCase, MeasurementCase::WorstCase],
    };
    let grid = eps.grid(0.005)?;
    if let Some(g) = p_grid {
        if grid.len() != 1 || noises.len() != 1 || cases.len() != 1 {
            bail!("--p-grid needs a single --eps, --noise and --case");
        }
        let q = ThresholdQuery::new(kind, grid[0], noises[0], cases[0])?;
        return Ok(robustness_table(&robustness_sweep(&q, &parse_grid(g)?)?));
    }
    let mut t = Table::new(&[
        "witness",
        "epsilon",
        "noise",
        "case",
        "threshold",
        "closed_form",
        "bound",
        "discrepancy",
        "note",
    ]);
    for &e in &grid {
        for &nk in &noises {
            for &c in &cases {
                let q = ThresholdQuery::new(kind, e, nk, c)?;
                let mut row = vec![kind.label(), fmt_num(e), nk.label().into(), c.label().into()];
                match threshold_visibility(&q) {
                    Ok(th) => row.extend([
                        fmt_num(th.p),
                        fmt_num(th.closed_form),
                        fmt_num(th.bound),
                        (th.discrepancy as u8).to_string(),
                        String::new(),
                    ]),
                    Err(GmeError::NoCrossing(msg)) => row.extend([
                        String::new(),
                        String::new(),
                        fmt_num(q.bound.value),
                        String::new(),
                        msg,
                    ]),
                    Err(other) => return Err(other.into()),
                }
                t.push(row);
            }
        }
    }
    Ok(t)
}

fn budget_from(eps: Option<f64>, eps_xyz: Option<&str>) -> Result<ImprecisionBudget> {
    Ok(match (eps, eps_xyz) {
        (Some(e), _) => ImprecisionBudget::uniform(4, [e; 3])?,
        (None, Some(s)) => {
            let v: Vec<f64> = s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("--eps-xyz `{s}`"))?;
            let [x, y, z] = v[..] else {
                bail!("--eps-xyz needs three values, got {}", v.len());
            };
            ImprecisionBudget::uniform(4, [x, y, z])?
        }
        (None, None) => laboratory_budget()?,
    })
}

fn cmd_fidelity(
    witness: &str,
    observed: Option<f64>,
    w_grid: Option<&str>,
    budget: ImprecisionBudget,
    seed: u64,
) -> Result<Table> {
    let kind = witness_kind(witness, None)?;
    if let Some(g) = w_grid {
        return Ok(fidelity_table(&fidelity_curve(kind, &budget, &parse_grid(g)?, &CURVE_ANCHORS, seed)?));
    }
    let w = observed.ok_or_else(|| anyhow!("--observed or --w-grid is required"))?;
    let mut q = FidelityBoundQuery::new(kind, w, budget);
    q.seed = seed;
    let b = numeric_l_eps(&q)?;
    let mut t = Table::new(&["witness", "observed", "w_fraction", "L0", "L_eps", "lambda"]);
    t.push(vec![
        kind.label(),
        fmt_num(w),
        fmt_num(w / ideal_max(kind)?),
        fmt_num(closed_form_l0(kind, w)?),
        fmt_num(b.value),
        fmt_num(b.lambda),
    ]);
    Ok(t)
}

fn cmd_tomo(path: &Path) -> Result<Table> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let counts = CountTable::from_csv_reader(file).with_context(|| format!("parsing {}", path.display()))?;
    let rep = gme_core::tomography::fidelity_from_counts(&counts)?;
    let mut t = Table::new(&["projector", "fidelity", "average_fidelity", "pass_fail", "min_eigenvalue", "clipped"]);
    for p in &rep.projectors {
        t.push(vec![
            p.projector.as_str().to_string(),
            fmt_num(p.fidelity),
            fmt_num(p.average_fidelity),
            fmt_num(p.pass_fail),
            fmt_num(p.min_eigenvalue),
            (p.clipped as u8).to_string(),
        ]);
    }
    Ok(t)
}

fn cmd_inm(m: usize, i43_bound: f64, seed: u64) -> Result<Table> {
    let d = di_thresholds(m, Some(i43_bound), seed)?;
    let mut t = Table::new(&["m", "threshold", "bound", "closed_form", "recheck"]);
    t.push(vec![
        d.m.to_string(),
        fmt_num(d.p),
        fmt_num(d.bound),
        fmt_opt(d.closed_form),
        fmt_num(d.recheck),
    ]);
    Ok(t)
}

fn cmd_verify(selected: &[u8]) -> Result<(Table, bool)> {
    let known: Vec<u8> = criteria().iter().map(|(k, _)| *k).collect();
    if let Some(bad) = selected.iter().find(|k| !known.contains(k)) {
        bail!("no criterion {bad}");
    }
    let checks: Vec<_> = criteria()
        .into_iter()
        .filter(|(k, _)| selected.is_empty() || selected.contains(k))
        .flat_map(|(_, f)| f())
        .collect();
    for c in &checks {
        eprintln!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    eprintln!("{} of {} checks pass", checks.len() - failed, checks.len());
    Ok((report_table(&checks), failed == 0))
}

fn emit(table: &Table, common: &Common) -> Result<()> {
    let text = table.render(common.format);
    match &common.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let common = &cli.common;
    if common.workers == 0 {
        bail!("--workers must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(common.workers)
        .build_global()
        .context("starting the worker pool")?;
    let (table, ok) = match &cli.command {
        Command::Bound { witness, n, eps } => (cmd_bound(witness, *n, eps)?, true),
        Command::Witness {
            state,
            witness,
            noise,
            eps,
            fixture,
        } => (cmd_witness(state.as_deref(), witness.as_deref(), *noise, *eps, fixture.as_deref())?, true),
        Command::Spoof { eps_grid } => (spoof_table(&spoofing_curve(&parse_grid(eps_grid)?)?), true),
        Command::Robustness {
            witness,
            eps,
            noise,
            case,
            p_grid,
        } => (cmd_robustness(witness, eps, noise.as_deref(), *case, p_grid.as_deref())?, true),
        Command::Fidelity {
            witness,
            observed,
            w_grid,
            eps,
            eps_xyz,
        } => {
            let budget = budget_from(*eps, eps_xyz.as_deref())?;
            (cmd_fidelity(witness, *observed, w_grid.as_deref(), budget, common.seed)?, true)
        }
        Command::Tomo { counts } => (cmd_tomo(counts)?, true),
        Command::Inm { m, i43_bound } => (cmd_inm(*m, *i43_bound, common.seed)?, true),
        Command::Verify { criterion } => cmd_verify(criterion)?,
    };
    emit(&table, common)?;
    Ok(ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
