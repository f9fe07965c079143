//! Command-line front end: analyze scenarios, trace evolutions, read the
//! clock, and run the self-verification battery.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use geomphase::cyclic;
use geomphase::dynamics::{self, Trajectory};
use geomphase::linalg;
use geomphase::operators;
use geomphase::par::Mode;
use geomphase::report::{self, SweepOrder};
use geomphase::scenario::Scenario;
use geomphase::verify;

#[derive(Parser)]
#[command(
    name = "geomphase",
    version,
    about = "Geometric phases, periods and intrinsic clocks of states under time-independent Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    /// Spectral decomposition (numerically exact).
    Exact,
    /// 4th-order Runge-Kutta on the Schrödinger equation.
    Rk4,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrderArg {
    /// Evaluate the sweep in ascending θ.
    Normal,
    /// Evaluate in descending θ (results must not change).
    Reversed,
}

#[derive(Subcommand)]
enum Command {
    /// Support, period, geometric phase, selection rule and operator
    /// statistics for one scenario.
    Analyze {
        /// Scenario description (JSON).
        file: PathBuf,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
        /// Also write the JSON report to this path.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Write the geometric operator matrix as CSV to this path.
        #[arg(long, value_name = "PATH")]
        g_matrix: Option<PathBuf>,
    },
    /// Propagate the state and write a CSV trace of the phase ledger.
    Evolve {
        /// Scenario description (JSON).
        file: PathBuf,
        /// Final time; defaults to one period when the state is cyclic.
        #[arg(long)]
        t_max: Option<f64>,
        /// Number of sample intervals (the trace has samples + 1 rows).
        #[arg(long, default_value_t = 2048)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
        method: MethodArg,
        /// Integrator substeps per sample interval (rk4 only).
        #[arg(long, default_value_t = 16)]
        substeps: usize,
        /// Output CSV path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },
    /// Run the self-verification battery over one or more scenarios.
    /// Exits nonzero if any check fails.
    Verify {
        /// Scenario descriptions (JSON).
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Verify the files one at a time instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Read the time operator at two instants of the cycle.
    Clock {
        /// Scenario description (JSON).
        file: PathBuf,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        t2: f64,
        /// Samples per period for the trajectory grid.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Compare the two-level closed form against the full pipeline and a
    /// propagation oracle over a θ grid; writes CSV.
    SweepTwoLevel {
        #[arg(long, default_value_t = 41)]
        steps: usize,
        /// Propagation samples per period for the oracle column.
        #[arg(long, default_value_t = 2048)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = OrderArg::Normal)]
        order: OrderArg,
        /// Evaluate the grid sequentially instead of in parallel.
        #[arg(long)]
        sequential: bool,
        /// Output CSV path; prints to stdout when omitted.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn sci(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.14e}")
    }
}

fn load(file: &Path) -> Result<Scenario> {
    Scenario::from_path(file).with_context(|| format!("reading scenario {}", file.display()))
}

fn cmd_analyze(
    file: PathBuf,
    json: bool,
    out: Option<PathBuf>,
    g_matrix: Option<PathBuf>,
) -> Result<()> {
    let sc = load(&file)?;
    let (spectrum, state) = sc.build()?;
    let (analysis, _, rep) = report::analyze_full(&spectrum, &state, &sc.options)?;

    if let Some(path) = g_matrix {
        if !(analysis.cyclic && !analysis.stationary) {
            bail!("the geometric operator needs a cyclic, non-stationary state");
        }
        let gop = operators::geometric_operator(&spectrum, &analysis, &state)?;
        let dim = gop.matrix.dim();
        let mut csv = String::new();
        for c in 0..dim {
            if c > 0 {
                csv.push(',');
            }
            write!(csv, "re_{c},im_{c}").ok();
        }
        csv.push('\n');
        for r in 0..dim {
            for c in 0..dim {
                if c > 0 {
                    csv.push(',');
                }
                let z = gop.matrix[(r, c)];
                write!(csv, "{},{}", sci(z.re), sci(z.im)).ok();
            }
            csv.push('\n');
        }
        std::fs::write(&path, csv)
            .with_context(|| format!("writing {}", path.display()))?;
    }

    let rendered = if json {
        serde_json::to_string_pretty(&rep)? + "\n"
    } else {
        rep.to_string()
    };
    print!("{rendered}");
    if let Some(path) = out {
        let payload = serde_json::to_string_pretty(&rep)? + "\n";
        std::fs::write(&path, payload)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn evolve_csv(traj: &Trajectory, ledger: &dynamics::PhaseLedger) -> String {
    let dim = traj.samples[0].state.len();
    let mut csv = String::from("t,s,fidelity,pancharatnam,dynamical,geometric,linear_law,divergence");
    for c in 0..dim {
        write!(csv, ",re_{c},im_{c}").ok();
    }
    csv.push('\n');
    let initial = &traj.samples[0].state;
    for (k, sample) in traj.samples.iter().enumerate() {
        let fidelity = linalg::dot(initial, &sample.state).norm_sqr();
        write!(
            csv,
            "{},{},{},{},{},{},{},{}",
            sci(sample.t),
            sci(sample.s),
            sci(fidelity),
            sci(ledger.pancharatnam[k]),
            sci(ledger.dynamical[k]),
            sci(ledger.geometric[k]),
            sci(ledger.linear_law[k]),
            sci(ledger.divergence[k]),
        )
        .ok();
        for z in &sample.state {
            write!(csv, ",{},{}", sci(z.re), sci(z.im)).ok();
        }
        csv.push('\n');
    }
    csv
}

fn cmd_evolve(
    file: PathBuf,
    t_max: Option<f64>,
    samples: usize,
    method: MethodArg,
    substeps: usize,
    out: PathBuf,
) -> Result<()> {
    if samples < 2 {
        bail!("--samples must be at least 2");
    }
    let sc = load(&file)?;
    let (spectrum, state) = sc.build()?;
    let supp = cyclic::support(&spectrum, &state, sc.options.eps_support)?;
    let analysis = cyclic::analyze_cycle(&supp)?;
    let t_max = match t_max.or(analysis.tau) {
        Some(t) if t > 0.0 => t,
        Some(t) => bail!("--t-max must be positive, got {t}"),
        None => bail!("scenario has no period; pass --t-max explicitly"),
    };

    let traj = match method {
        MethodArg::Exact => dynamics::propagate_exact(
            &spectrum,
            &state,
            analysis.gauge_lambda,
            &dynamics::time_grid(t_max, samples),
            Mode::Auto,
        )?,
        MethodArg::Rk4 => dynamics::propagate_rk4(
            &spectrum,
            &state,
            analysis.gauge_lambda,
            t_max,
            samples,
            substeps.max(1),
            false,
        )?,
    };
    let ledger = dynamics::phase_ledger(&traj, &analysis)?;
    std::fs::write(&out, evolve_csv(&traj, &ledger))
        .with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote {} samples ({} method, t ≤ {}) to {}",
        traj.samples.len(),
        traj.method,
        sci(t_max),
        out.display()
    );
    Ok(())
}

fn cmd_verify(files: Vec<PathBuf>, sequential: bool) -> Result<()> {
    let mode = if sequential { Mode::Sequential } else { Mode::Auto };
    let results = geomphase::par::map_collect_mode(mode, files.len(), |k| {
        let file = &files[k];
        let report = load(file).and_then(|sc| Ok(verify::verify_scenario(&sc)?));
        (file.display().to_string(), report)
    });

    let mut all_passed = true;
    let mut failures = Vec::new();
    for (name, outcome) in &results {
        println!("── {name}");
        match outcome {
            Ok(rep) => {
                print!("{rep}");
                if !rep.passed() {
                    all_passed = false;
                    failures.push(name.clone());
                }
            }
            Err(e) => {
                println!("  error: {e:#}");
                all_passed = false;
                failures.push(name.clone());
            }
        }
    }
    if all_passed {
        println!("all {} scenario(s) verified", results.len());
        Ok(())
    } else {
        println!("verification FAILED for: {}", failures.join(", "));
        std::process::exit(1);
    }
}

fn cmd_clock(file: PathBuf, t1: f64, t2: f64, samples: Option<usize>) -> Result<()> {
    let sc = load(&file)?;
    let (spectrum, state) = sc.build()?;
    let supp = cyclic::support(&spectrum, &state, sc.options.eps_support)?;
    let analysis = cyclic::analyze_cycle(&supp)?;
    let tau = match analysis.tau {
        Some(t) if !analysis.stationary => t,
        _ => bail!("the clock needs a cyclic, non-stationary state"),
    };
    for (name, t) in [("--t1", t1), ("--t2", t2)] {
        if !(0.0..=tau).contains(&t) {
            bail!("{name} = {t} is outside the cycle [0, {}]", sci(tau));
        }
    }

    let n = samples.unwrap_or(sc.options.samples_per_period).max(8);
    let traj = dynamics::propagate_exact(
        &spectrum,
        &state,
        analysis.gauge_lambda,
        &dynamics::time_grid(tau, n),
        Mode::Auto,
    )?;
    // clamp to where the finite-difference stencil fits
    let index_of = |t: f64| (((t / tau) * n as f64).round() as usize).clamp(2, n - 2);
    let (i1, i2) = (index_of(t1), index_of(t2));
    if i1 == i2 {
        bail!("--t1 and --t2 land on the same sample; refine --samples");
    }
    let te1 = operators::time_operator_expectation(&traj, &spectrum, &analysis, i1)?;
    let te2 = operators::time_operator_expectation(&traj, &spectrum, &analysis, i2)?;
    let comm = operators::commutator_expectations(&spectrum, &analysis, &state, te1.t, None)?;

    println!(
        "clock readings (τ = {}, Γ = {})",
        sci(tau),
        sci(analysis.gamma_unreduced)
    );
    for te in [&te1, &te2] {
        let fd = te.expect_t_fd.map(sci).unwrap_or_else(|| "—".into());
        println!(
            "  t = {}  ⟨T⟩ = {}  sampled = {fd}  s = {}  ⟨S⟩ = {}",
            sci(te.t),
            sci(te.expect_t),
            sci(te.s),
            sci(te.expect_s),
        );
    }
    let dt = te2.t - te1.t;
    let d_expect = te2.expect_t - te1.expect_t;
    println!(
        "  interval: Δt = {}  Δ⟨T⟩ = {}  defect = {}",
        sci(dt),
        sci(d_expect),
        sci((d_expect - dt).abs()),
    );
    println!("commutators at t = {} (dc = {:.3e}):", sci(te1.t), comm.dc);
    println!(
        "  ⟨[H,T]⟩ = {} + {}i   target iħ: 0 + {}i",
        sci(comm.ht.re),
        sci(comm.ht.im),
        sci(comm.hbar)
    );
    println!(
        "  ⟨[G,T]⟩ = {} + {}i   target iτ: 0 + {}i",
        sci(comm.gt.re),
        sci(comm.gt.im),
        sci(comm.tau)
    );
    println!(
        "  matrix [H,G] expectation: {} + {}i",
        sci(comm.matrix_hg.re),
        sci(comm.matrix_hg.im)
    );
    Ok(())
}

fn cmd_sweep(
    steps: usize,
    samples: usize,
    order: OrderArg,
    sequential: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    if steps < 2 {
        bail!("--steps must be at least 2");
    }
    let order = match order {
        OrderArg::Normal => SweepOrder::Normal,
        OrderArg::Reversed => SweepOrder::Reversed,
    };
    let mode = if sequential { Mode::Sequential } else { Mode::Auto };
    let rows = report::sweep_two_level_mode(steps, samples, order, mode)?;
    let csv = report::sweep_to_csv(&rows);
    match out {
        Some(path) => {
            std::fs::write(&path, csv)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze {
            file,
            json,
            out,
            g_matrix,
        } => cmd_analyze(file, json, out, g_matrix),
        Command::Evolve {
            file,
            t_max,
            samples,
            method,
            substeps,
            out,
        } => cmd_evolve(file, t_max, samples, method, substeps, out),
        Command::Verify { files, sequential } => cmd_verify(files, sequential),
        Command::Clock {
            file,
            t1,
            t2,
            samples,
        } => cmd_clock(file, t1, t2, samples),
        Command::SweepTwoLevel {
            steps,
            samples,
            order,
            sequential,
            out,
        } => cmd_sweep(steps, samples, order, sequential, out),
    }
}
