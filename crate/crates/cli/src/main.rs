use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdcoupler_cli::config::RunConfig;
use qdcoupler_cli::error::{CliError, Result};
use qdcoupler_cli::figures;
use qdcoupler_cli::run::{self, Context, ModesRequest, TransmitRequest};

/// Fiber-taper / semiconductor-channel directional coupler simulator.
///
/// Every configuration key can be overridden from the environment as
/// COUPLER_SIM_<SECTION>__<FIELD>, e.g. COUPLER_SIM_GRID__DX_NM=20.
#[derive(Debug, Parser)]
#[command(name = "qdcoupler", version)]
struct Cli {
    /// JSON run configuration; defaults are used for missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `sweep.output_dir`).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the supermodes of one channel width.
    Modes {
        #[arg(long = "wch-nm")]
        wch_nm: Option<f64>,
        /// Effective-index search window `lo,hi`.
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64)>,
        /// Eigenpairs requested per symmetry class.
        #[arg(long)]
        k: Option<usize>,
        /// Also write `epsilon_<W>.csv`.
        #[arg(long)]
        dump_epsilon: bool,
        /// Also write raw binary field planes per mode.
        #[arg(long)]
        dump_fields: bool,
    },
    /// Collection efficiency of one width for the configured dipole axes.
    Collect {
        #[arg(long = "wch-nm")]
        wch_nm: Option<f64>,
    },
    /// Resonant transmission and lineshape of one width.
    Transmit {
        #[arg(long = "wch-nm")]
        wch_nm: Option<f64>,
        #[arg(long = "z0-um")]
        z0_um: Option<f64>,
        #[arg(long = "zmax-um")]
        zmax_um: Option<f64>,
        /// Laser detuning in units of the total linewidth.
        #[arg(long, allow_hyphen_values = true)]
        detuning: Option<f64>,
    },
    /// Width sweep producing the figure-data bundle and manifest.
    Sweep {
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Render SVG plots for the tables in a directory, or for a single CSV.
    Figures {
        /// Single table to plot.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Target for `--csv`; defaults to the same name with `.svg`.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Check the sparse eigensolver against dense reference problems.
    EigSelftest,
}

fn parse_window(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once([',', ':'])
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    if !(lo < hi) {
        return Err(format!("window lower bound {lo} must be below {hi}"));
    }
    Ok((lo, hi))
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(out) = cli.out {
        cfg.sweep.output_dir = out;
    }
    let width = |w: Option<f64>, cfg: &RunConfig| w.unwrap_or(cfg.geometry.channel_width_nm);
    match cli.command {
        Command::Modes {
            wch_nm,
            window,
            k,
            dump_epsilon,
            dump_fields,
        } => {
            let request = ModesRequest {
                window,
                count: k,
                dump_epsilon,
                dump_fields,
            };
            let w = width(wch_nm, &cfg);
            let (basis, files) = run::modes_command(&cfg, w, request)?;
            for m in &basis.modes {
                println!(
                    "{:<10} n_eff = {:.6}{:+.2e}i  guided = {}",
                    m.label.to_string(),
                    m.n_eff.re,
                    m.n_eff.im,
                    m.guided
                );
            }
            report(&files);
        }
        Command::Collect { wch_nm } => {
            let w = width(wch_nm, &cfg);
            let ctx = Context::new(cfg)?;
            let (summary, files) = run::single_point(&ctx, w, false)?;
            for a in &summary.axes {
                println!(
                    "{}-dipole: max eta_PL = {:.4} at z = {:.3} um",
                    a.axis.name(),
                    a.eta_max,
                    a.z_at_max
                );
            }
            report(&files);
        }
        Command::Transmit {
            wch_nm,
            z0_um,
            zmax_um,
            detuning,
        } => {
            let w = width(wch_nm, &cfg);
            let ctx = Context::new(cfg)?;
            let request = TransmitRequest {
                z0_um,
                z_max_um: zmax_um,
                detuning,
            };
            let (tr, files) = run::transmit_command(&ctx, w, request)?;
            println!(
                "z0 = {:.4} um, dT range [{:.4}, {:.4}], max contrast {:.2} dB",
                tr.z0_um,
                tr.scan.dt_min.0,
                tr.scan.dt_max.0,
                tr.scan.max_contrast_db()
            );
            report(&files);
        }
        Command::Sweep { workers } => {
            if let Some(n) = workers {
                cfg.sweep.workers = n;
            }
            let dir = cfg.sweep.output_dir.clone();
            let ctx = Context::new(cfg)?;
            let report = run::sweep(&ctx, &mut |_, _, s| {
                eprintln!("W = {} nm done ({:.1} s)", s.width_nm, s.seconds);
            })?;
            println!(
                "{} points, {} failed, manifest {}",
                report.manifest.points.len(),
                report.failed,
                dir.join("manifest.json").display()
            );
            report.into_result()?;
        }
        Command::Figures { csv, svg } => match csv {
            Some(csv) => {
                let svg = svg.unwrap_or_else(|| csv.with_extension("svg"));
                figures::render(&csv, &svg)?;
                report(&[svg]);
            }
            None => report(&figures::render_dir(&cfg.sweep.output_dir)?),
        },
        Command::EigSelftest => {
            let cases = qdc_sparse::selftest::run_suite();
            let mut failed = 0;
            for c in &cases {
                println!(
                    "{:<4} {:<24} n = {:<5} error {:.2e} (tol {:.0e})",
                    if c.passed { "ok" } else { "FAIL" },
                    c.name,
                    c.n,
                    c.max_error,
                    c.tolerance
                );
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(CliError::Partial {
                    failed,
                    total: cases.len(),
                });
            }
        }
    }
    Ok(())
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
