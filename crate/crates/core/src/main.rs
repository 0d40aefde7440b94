use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rydberg_flyby::scanner::{
    find_peaks, load_config, mode_name, run_scan, write_csv, write_json, ConfigError, Format, Mode, ScanContext,
    ScanError, ScanOutput,
};
use rydberg_flyby::units::a0_to_um;

#[derive(Parser)]
#[command(name = "flyby", version, about = "Rydberg atom excitation by a guided electron")]
struct Cli {
    /// Worker threads for scans (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Accepted for scripts that require it; every computation is deterministic.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured mode on its kappa grid.
    Scan(Io),
    /// Kinetic energies for the depletion targets of a table1 config.
    Invert {
        #[command(flatten)]
        io: Io,
        /// Override the configured targets (repeatable).
        #[arg(long)]
        target: Vec<f64>,
    },
    /// Locate the maxima of analytic or many-body curves.
    Peak(Io),
    /// Check a config and print it with all defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct Io {
    #[arg(long)]
    config: PathBuf,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides [output] format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    let result = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(ScanError::Config(config_error(format!("cannot start {n} threads: {e}")))),
        },
        None => run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn config_error(message: String) -> ConfigError {
    ConfigError { message, line: None }
}

fn context(path: &PathBuf) -> Result<ScanContext, ScanError> {
    let job = load_config(path).map_err(|mut e| {
        e.message = format!("{}: {}", path.display(), e.message);
        e
    })?;
    ScanContext::new(job)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, ScanError> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn format_of(io: &Io, ctx: &ScanContext) -> Format {
    match io.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => ctx.config().output.format,
    }
}

fn emit(io: &Io, ctx: &ScanContext, output: &ScanOutput) -> Result<(), ScanError> {
    let mut w = sink(&io.out)?;
    match format_of(io, ctx) {
        Format::Csv => write_csv(output, &mut w)?,
        Format::Json => write_json(output, &mut w)?,
    }
    w.flush()?;
    eprintln!("{}: {} rows, {} failed", mode_name(ctx.config().mode), output.rows.len(), output.failures.len());
    for f in &output.failures {
        eprintln!("  row {}: {}", f.row, f.message);
    }
    if output.failures.is_empty() {
        Ok(())
    } else {
        Err(ScanError::Incomplete { failed: output.failures.len(), total: output.rows.len() })
    }
}

fn run(command: Command) -> Result<(), ScanError> {
    match command {
        Command::Scan(io) => {
            let ctx = context(&io.config)?;
            let output = run_scan(&ctx)?;
            emit(&io, &ctx, &output)
        }
        Command::Invert { io, target } => {
            let mut ctx = context(&io.config)?;
            if ctx.config().mode != Mode::Table1 {
                return Err(ScanError::Config(config_error(format!(
                    "{}: invert needs mode = \"table1\"",
                    io.config.display()
                ))));
            }
            if !target.is_empty() {
                let mut config = ctx.job.config.clone();
                if let Some(t) = config.table1.as_mut() {
                    t.targets = target;
                }
                let text = toml::to_string(&config).expect("configuration serializes");
                ctx = ScanContext::new(rydberg_flyby::scanner::parse_config(&text, None)?)?;
            }
            let output = run_scan(&ctx)?;
            emit(&io, &ctx, &output)
        }
        Command::Peak(io) => {
            let ctx = context(&io.config)?;
            let peaks = find_peaks(&ctx)?;
            let mut w = sink(&io.out)?;
            match format_of(&io, &ctx) {
                Format::Csv => {
                    writeln!(w, "# config_sha256: {}", ctx.provenance().config_sha256)?;
                    writeln!(w, "curve,kappa,kinetic_energy_ev,probability")?;
                    for p in &peaks {
                        writeln!(w, "{},{:.12e},{:.12e},{:.12e}", p.curve, p.kappa, p.kinetic_energy_ev, p.probability)?;
                    }
                }
                Format::Json => {
                    serde_json::to_writer_pretty(&mut w, &peaks).map_err(io::Error::from)?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
            Ok(())
        }
        Command::Validate { config } => {
            let ctx = context(&config)?;
            print!("{}", ctx.job.resolved_toml());
            eprintln!("configuration is valid");
            eprintln!("  distance: {:.6} um ({:.3} a0)", a0_to_um(ctx.distance), ctx.distance);
            eprintln!("  eta ({0}s -> {0}p): {1:.6}", ctx.config().n, ctx.eta());
            if let Some(num) = &ctx.numeric {
                eprintln!("  basis: {} states", num.basis.len());
                let kappas = ctx.job.kappas();
                for k in [kappas[0], kappas[kappas.len() - 1]] {
                    if let Some(report) = ctx.validity(k)? {
                        eprintln!("  validity at kappa = {k}: {}", if report.all_satisfied() { "ok" } else { "violated" });
                    }
                }
            }
            Ok(())
        }
    }
}
