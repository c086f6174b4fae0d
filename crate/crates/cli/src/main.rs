//! `fwdrates`: forward rates, cash flows, property checks and simulation
//! from a TOML run configuration.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fwdrates_core::csv_io::{
    cash_flow_table, format_number, rate_curve_table, write_estimates, NumericTable,
};
use fwdrates_core::forward_rates::{repair_model, Definition, DENSE_RESIDUAL_FLAG};
use fwdrates_core::kolmogorov::{point_mass, prospective_reserve};
use fwdrates_core::mc_oracle::{simulate, SimulationConfig, Target};
use fwdrates_core::{Analysis, ModelGraph, PaymentSpec, TimeGrid};
use serde::Serialize;

use config::{resolve, Overrides, Resolved, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "fwdrates", version, about = "Forward transition rates for multi-state models with stochastic intensities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, clap::Args)]
struct Flags {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Restrict to one definition.
    #[arg(long, global = true)]
    definition: Option<Definition>,
    /// Starting (conditioning) state.
    #[arg(long, global = true)]
    state: Option<usize>,
    /// Valuation time.
    #[arg(long, global = true)]
    t: Option<f64>,
    /// Projection length in years.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Reporting grid step; the solver steps match it.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Monte Carlo paths.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Constant short rate for the prospective reserve.
    #[arg(long, global = true)]
    short_rate: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Forward rate curves per definition.
    Rates,
    /// Two-step expected cash flow next to the exact value.
    Cashflow,
    /// Property report: universality, state independence and both
    /// replacement identities.
    Verify,
    /// Monte Carlo estimates of occupancies, densities and payments.
    Simulate,
    /// Split absorbing states by route of entry, rewrite the payments and
    /// valuate with forward equations rates.
    Repair,
    /// All definitions side by side.
    Compare,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.flags.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let f = &cli.flags;
    let overrides = Overrides {
        definition: f.definition,
        state: f.state,
        t: f.t,
        horizon: f.horizon,
        step: f.step,
        paths: f.paths,
        seed: f.seed,
        short_rate: f.short_rate,
        out: f.out.clone(),
    };
    let r = resolve(cfg, &overrides)?;
    fs::create_dir_all(&r.out).with_context(|| format!("creating {}", r.out.display()))?;
    match cli.command {
        Command::Rates => rates(&r),
        Command::Cashflow => cashflow(&r),
        Command::Verify => verify(&r),
        Command::Simulate => simulate_cmd(&r),
        Command::Repair => repair(&r),
        Command::Compare => compare(&r),
    }
}

fn analysis(r: &Resolved) -> Result<Analysis> {
    Ok(Analysis::new(r.graph.clone(), r.law.clone(), r.grid)?)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_table(dir: &Path, name: &str, table: &NumericTable) -> Result<()> {
    let mut w = create(dir, name)?;
    table.write(&mut w)?;
    w.flush()?;
    println!("wrote {}", dir.join(name).display());
    Ok(())
}

fn rates_file(d: Definition, state: usize) -> String {
    match d {
        Definition::Statewise => format!("rates_statewise_{state}.csv"),
        _ => format!("rates_{d}.csv"),
    }
}

fn rates(r: &Resolved) -> Result<()> {
    let a = analysis(r)?;
    for &d in &r.definitions {
        let curve = a
            .rates(d, r.state)
            .with_context(|| format!("{d} rates"))?
            .restrict(&r.grid)?;
        let undefined = curve.undefined_nodes();
        if undefined > 0 {
            println!("{d}: {undefined} rate values undefined (zero occupancy), left empty");
        }
        let residual = curve.residual.iter().flatten().copied().fold(0.0, f64::max);
        if residual > DENSE_RESIDUAL_FLAG {
            println!("{d}: forward equations inconsistent, max residual {residual:.3e}");
        }
        write_table(&r.out, &rates_file(d, r.state), &rate_curve_table(&curve))?;
    }
    Ok(())
}

fn cashflow(r: &Resolved) -> Result<()> {
    let a = analysis(r)?;
    let start = point_mass(r.graph.num_states(), r.state);
    let oracle = a.oracle_cash_flow(&r.payments, &start)?;
    println!(
        "from state {} over [{}, {}]: exact A = {}, reserve = {}",
        r.state,
        r.grid.t0(),
        r.grid.last(),
        format_number(oracle.total()),
        format_number(prospective_reserve(&oracle, &r.short_rate))
    );
    for &d in &r.definitions {
        let rates = a.rate_set(d).with_context(|| format!("{d} rates"))?;
        let cf = a.cash_flow(&rates, &r.payments, &start)?;
        println!(
            "{d:<10} two-step A = {}, reserve = {}, |A - exact| = {:.3e}",
            format_number(cf.total()),
            format_number(prospective_reserve(&cf, &r.short_rate)),
            (cf.total() - oracle.total()).abs()
        );
        write_table(&r.out, &format!("cashflow_{d}.csv"), &cash_flow_table(&cf, Some(&oracle)))?;
    }
    Ok(())
}

fn verify(r: &Resolved) -> Result<()> {
    let a = analysis(r)?;
    let table = a.property_table(&r.definitions)?;
    let report = format!("model {}, from t = {}\n{}", r.name, r.grid.t0(), table.render());
    print!("{report}");
    let path = r.out.join("verify.txt");
    fs::write(&path, report).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Factor sampling grid over the same horizon as the reporting grid.
fn simulation_grid(r: &Resolved) -> Result<TimeGrid> {
    let length = r.grid.last() - r.grid.t0();
    let intervals = (length / r.factor_step).round().max(1.0) as usize;
    Ok(TimeGrid::with_intervals(r.grid.t0(), length / intervals as f64, intervals)?)
}

fn simulate_cmd(r: &Resolved) -> Result<()> {
    let config = SimulationConfig {
        paths: r.paths,
        seed: r.seed,
        grid: simulation_grid(r)?,
        start: point_mass(r.graph.num_states(), r.state),
    };
    let time = config.grid.last();
    let mut targets: Vec<Target> = (0..r.graph.num_states())
        .map(|state| Target::Occupancy { state, time })
        .collect();
    targets.extend(
        r.graph
            .transitions()
            .iter()
            .map(|&(from, to)| Target::TransitionDensity { from, to, time }),
    );
    targets.push(Target::AccumulatedPayments {
        payments: r.payments.clone(),
        time,
    });
    let table = simulate(&r.graph, &r.law, &config, &targets)?;
    for e in &table.rows {
        println!("{:<24} {} (SE {:.3e})", e.target, format_number(e.estimate), e.standard_error);
    }
    let mut w = create(&r.out, "estimates.csv")?;
    write_estimates(&mut w, &table)?;
    w.flush()?;
    println!("wrote {}", r.out.join("estimates.csv").display());
    Ok(())
}

#[derive(Serialize)]
struct RepairedOutput<'a> {
    split: &'a [usize],
    state_map: &'a [usize],
    model: &'a ModelGraph,
    payments: &'a PaymentSpec,
}

fn repair(r: &Resolved) -> Result<()> {
    let split = r.split.clone().unwrap_or_else(|| {
        (0..r.graph.num_states())
            .filter(|&d| r.graph.is_absorbing(d) && r.graph.predecessors(d).len() > 1)
            .collect()
    });
    let repaired = repair_model(&r.graph, &r.payments, &split)?;
    let summary = toml::to_string(&RepairedOutput {
        split: &split,
        state_map: &repaired.state_map,
        model: &repaired.augmented,
        payments: &repaired.payments,
    })?;
    let path = r.out.join("repaired_model.toml");
    fs::write(&path, summary).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());

    let original = analysis(r)?;
    let start = point_mass(r.graph.num_states(), r.state);
    let exact = original.oracle_cash_flow(&r.payments, &start)?;

    let law = repaired.remap_law(&r.law)?;
    let a = Analysis::new(repaired.augmented.clone(), law, r.grid)?;
    let rates = a.rate_set(Definition::Equations)?;
    let lifted = repaired.lift_distribution(&start);
    let cf = a.cash_flow(&rates, &repaired.payments, &lifted)?;
    println!(
        "repaired model, equations rates: A = {}, reserve = {}; exact on the original model: A = {}, |diff| = {:.3e}",
        format_number(cf.total()),
        format_number(prospective_reserve(&cf, &r.short_rate)),
        format_number(exact.total()),
        (cf.total() - exact.total()).abs()
    );
    write_table(&r.out, "cashflow_repaired.csv", &cash_flow_table(&cf, Some(&exact)))
}

fn compare(r: &Resolved) -> Result<()> {
    let a = analysis(r)?;
    let curves = r
        .definitions
        .iter()
        .map(|&d| Ok((d, a.rates(d, r.state)?.restrict(&r.grid)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["T".to_owned()];
    for &(k, l) in r.graph.transitions() {
        for (d, _) in &curves {
            header.push(format!("{d}_{k}_{l}"));
        }
    }
    let rows = r
        .grid
        .nodes()
        .enumerate()
        .map(|(i, t)| {
            let mut row = vec![Some(t)];
            for &(k, l) in r.graph.transitions() {
                row.extend(curves.iter().map(|(_, c)| c.get(i, k, l)));
            }
            row
        })
        .collect();
    write_table(&r.out, "compare.csv", &NumericTable { header, rows })
}
