//! `vexsim`: assemble, run, benchmark and sweep.
//!
//! Exit status is 0 only when every run validated (or, for `run`, the
//! program exited with code 0).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use vexsim::asm::{assemble, link_and_dump};
use vexsim::bench::{run_bench, seed_override, sweep, write_csv, BenchName, BenchSpec, Grid, MetricsRow};
use vexsim::config::SimConfig;
use vexsim::cpu::{ExecStats, Simulator};
use vexsim::image::Image;

#[derive(Parser)]
#[command(name = "vexsim", version, about = "RV32IM + custom SIMD simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a source file into an image (symbols go to <img>.sym).
    Asm {
        src: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run an image until it exits.
    Run {
        image: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000_000_000)]
        max_cycles: u64,
        /// Write execution statistics as JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Run one bundled benchmark and append its metrics row to a CSV file.
    Bench {
        name: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Data size in bytes; defaults to the config's bench.bytes.
        #[arg(long)]
        bytes: Option<u64>,
    },
    /// Run a grid of configurations and write one row per point.
    Sweep {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Print a listing of an image.
    Disasm { image: PathBuf },
}

fn symbol_path(image: &Path) -> PathBuf {
    let mut p = image.as_os_str().to_owned();
    p.push(".sym");
    PathBuf::from(p)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::from_json(&read_text(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(SimConfig::default()),
    }
}

fn load_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut image = Image::from_bytes(&bytes).with_context(|| format!("loading {}", path.display()))?;
    let sym = symbol_path(path);
    if sym.exists() {
        image.symbols = Image::parse_symbols(&read_text(&sym)?).with_context(|| format!("in {}", sym.display()))?;
    }
    Ok(image)
}

fn write_rows(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_csv(rows, file)?;
    Ok(())
}

fn print_row(row: &MetricsRow) {
    let status = if row.validated { "ok" } else { "INVALID" };
    eprintln!(
        "{:<13} {:>10} B  cycles {:>12}  {:>9.1} MB/s  {status}{}",
        row.bench,
        row.data_bytes,
        row.cycles,
        row.mb_per_s,
        if row.error.is_empty() { String::new() } else { format!(": {}", row.error) }
    );
}

fn summary(stats: &ExecStats) -> String {
    format!(
        "cycles {}  instructions {}  stalls {}  dl1 hit rate {:.3}  llc hit rate {:.3}",
        stats.cycles,
        stats.instructions,
        stats.stalls.total(),
        stats.mem.dl1.hit_rate(),
        stats.mem.llc.hit_rate()
    )
}

fn cmd_asm(src: &Path, output: &Path) -> Result<bool> {
    let text = read_text(src)?;
    let image = assemble(&text).map_err(|e| anyhow::anyhow!("{}:{e}", src.display()))?;
    fs::write(output, image.to_bytes()).with_context(|| format!("writing {}", output.display()))?;
    let sym = symbol_path(output);
    fs::write(&sym, image.symbols_text()).with_context(|| format!("writing {}", sym.display()))?;
    Ok(true)
}

fn cmd_run(image: &Path, config: Option<&Path>, max_cycles: u64, stats_path: Option<&Path>) -> Result<bool> {
    let config = load_config(config)?;
    let image = load_image(image)?;
    let mut sim = Simulator::new(&config)?;
    sim.load_image(&image)?;
    let result = sim.run(Some(max_cycles));
    std::io::stdout().write_all(sim.output())?;
    let stats = sim.stats();
    eprintln!("{}", summary(&stats));
    if let Some(p) = stats_path {
        fs::write(p, serde_json::to_string_pretty(&stats)?).with_context(|| format!("writing {}", p.display()))?;
    }
    result?;
    match sim.state().exit_code {
        Some(0) => Ok(true),
        Some(code) => {
            eprintln!("program exited with code {code}");
            Ok(false)
        }
        None => bail!("program stopped without exiting"),
    }
}

fn cmd_bench(name: &str, config: Option<&Path>, csv: Option<&Path>, bytes: Option<u64>) -> Result<bool> {
    let config = load_config(config)?;
    let mut spec = BenchSpec::from_config(name.parse::<BenchName>()?, &config);
    if let Some(b) = bytes {
        spec.data_bytes = b;
    }
    if let Some(seed) = seed_override() {
        spec.seed = seed;
    }
    let result = run_bench(&spec)?;
    print_row(&result.row);
    if let Some(path) = csv {
        write_rows(std::slice::from_ref(&result.row), path)?;
    }
    Ok(result.row.validated)
}

fn cmd_sweep(grid: &Path, csv: &Path) -> Result<bool> {
    let mut grid = Grid::from_json(&read_text(grid)?).with_context(|| format!("in {}", grid.display()))?;
    if let Some(seed) = seed_override() {
        grid.seed = Some(seed);
    }
    let rows = sweep(&grid);
    for row in &rows {
        print_row(row);
    }
    write_rows(&rows, csv)?;
    Ok(rows.iter().all(|r| r.validated))
}

fn cmd_disasm(image: &Path) -> Result<bool> {
    let image = load_image(image)?;
    print!("{}", link_and_dump(&image));
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Asm { src, output } => cmd_asm(src, output),
        Command::Run { image, config, max_cycles, stats } => cmd_run(image, config.as_deref(), *max_cycles, stats.as_deref()),
        Command::Bench { name, config, csv, bytes } => cmd_bench(name, config.as_deref(), csv.as_deref(), *bytes),
        Command::Sweep { grid, csv } => cmd_sweep(grid, csv),
        Command::Disasm { image } => cmd_disasm(image),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
