//! Batch front-end: read a JSON experiment config, run the matching
//! pipeline, and write CSV tables; `plot` renders an existing CSV as SVG.

mod csv_out;
mod plot;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csv_out::{peak_rows, sci, spectrum_rows, write_csv};
use ionspec_core::config::ExperimentConfig;
use ionspec_core::pipeline::{
    build_model, pipeline_absolute, pipeline_beatnote, pipeline_dispersion, pipeline_ion_chain,
    pipeline_two_particle,
};
use ionspec_core::Error as CoreError;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ionspec",
    version,
    about = "Spin-chain quasiparticle spectroscopy toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the mode table (energies and site amplitudes) for the model
    Modes(RunArgs),
    /// Rotating-frame transverse signal, spectrum, and peaks for one mode
    Absolute(RunArgs),
    /// Population beat note between two prepared modes
    Beatnote(RunArgs),
    /// Scan every mode against the base mode and tabulate the gaps
    Dispersion(RunArgs),
    /// Post-selected two-excitation signals with interaction markers
    TwoParticle(RunArgs),
    /// Trap equilibrium positions, transverse modes, and coupling fit
    IonChain(RunArgs),
    /// Render a CSV written by another subcommand as an SVG
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Directory for the output CSV files (created if missing)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV file to render
    #[arg(long)]
    csv: PathBuf,
    /// How to interpret the CSV columns
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Directory for the SVG (created if missing)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PlotKind {
    /// Time in the first column, one line per further column
    Series,
    /// Frequency/amplitude pairs; local maxima get markers
    Spectrum,
    /// Mode index, measured frequency, reference frequency
    Dispersion,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

fn core_failure(e: CoreError) -> Failure {
    let code = match e {
        CoreError::Numerical(_) => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    };
    Failure {
        code,
        message: e.to_string(),
    }
}

fn io_failure<'a>(
    context: &'a str,
    path: &'a Path,
) -> impl FnOnce(std::io::Error) -> Failure + 'a {
    move |e| Failure::config(format!("{context} {}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Modes(a) => cmd_modes(&a),
        Command::Absolute(a) => cmd_absolute(&a),
        Command::Beatnote(a) => cmd_beatnote(&a),
        Command::Dispersion(a) => cmd_dispersion(&a),
        Command::TwoParticle(a) => cmd_two_particle(&a),
        Command::IonChain(a) => cmd_ion_chain(&a),
        Command::Plot(a) => cmd_plot(&a),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(io_failure("cannot read", path))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))?;
    cfg.validate().map_err(core_failure)?;
    Ok(cfg)
}

fn prepare_out(a: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let cfg = load_config(&a.config)?;
    std::fs::create_dir_all(&a.out).map_err(io_failure("cannot create", &a.out))?;
    Ok(cfg)
}

fn save(out: &Path, name: &str, header: &str, rows: &[String]) -> Result<(), Failure> {
    let path = out.join(name);
    write_csv(&path, header, rows).map_err(io_failure("cannot write", &path))
}

fn cmd_modes(a: &RunArgs) -> Result<(), Failure> {
    let cfg = prepare_out(a)?;
    let model = build_model(&cfg).map_err(core_failure)?;
    let n = model.modes.n_spins();
    let mut header = String::from("k,energy_hz");
    for j in 1..=n {
        header.push_str(&format!(",amp_site_{j}_dimensionless"));
    }
    let rows: Vec<String> = (1..=n)
        .map(|k| {
            let mut row = format!("{k},{}", sci(model.modes.energy(k) / TAU));
            for v in model.modes.amplitude(k).iter() {
                row.push(',');
                row.push_str(&sci(*v));
            }
            row
        })
        .collect();
    save(&a.out, "modes.csv", &header, &rows)
}

fn cmd_absolute(a: &RunArgs) -> Result<(), Failure> {
    let cfg = prepare_out(a)?;
    let res = pipeline_absolute(&cfg).map_err(core_failure)?;
    let rows: Vec<String> = res
        .series
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{},{},{}", sci(res.series.time(i)), sci(v.re), sci(v.im)))
        .collect();
    save(
        &a.out,
        "series.csv",
        "time_s,x_tilde_dimensionless,y_tilde_dimensionless",
        &rows,
    )?;
    save(
        &a.out,
        "spectrum.csv",
        "frequency_hz,amplitude_s",
        &spectrum_rows(&res.spectrum),
    )?;
    save(
        &a.out,
        "peaks.csv",
        "frequency_hz,amplitude_s,interpolated",
        &peak_rows(&res.peaks),
    )?;
    save(
        &a.out,
        "summary.csv",
        "expected_hz,bin_hz",
        &[format!("{},{}", sci(res.expected_hz), sci(res.bin_hz))],
    )
}

fn cmd_beatnote(a: &RunArgs) -> Result<(), Failure> {
    let cfg = prepare_out(a)?;
    let res = pipeline_beatnote(&cfg).map_err(core_failure)?;
    let rows: Vec<String> = res
        .series
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{},{}", sci(res.series.time(i)), sci(*v)))
        .collect();
    save(&a.out, "series.csv", "time_s,m1_dimensionless", &rows)?;
    save(
        &a.out,
        "spectrum.csv",
        "frequency_hz,amplitude_s",
        &spectrum_rows(&res.spectrum),
    )?;
    save(
        &a.out,
        "peaks.csv",
        "frequency_hz,amplitude_s,interpolated",
        &peak_rows(&res.peaks),
    )?;
    save(
        &a.out,
        "summary.csv",
        "expected_gap_hz,bin_hz",
        &[format!("{},{}", sci(res.expected_gap_hz), sci(res.bin_hz))],
    )
}

fn cmd_dispersion(a: &RunArgs) -> Result<(), Failure> {
    let cfg = prepare_out(a)?;
    let res = pipeline_dispersion(&cfg).map_err(core_failure)?;
    let rows: Vec<String> = res
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.k_prime,
                sci(r.measured_hz),
                sci(r.exact_hz),
                sci(r.dominance),
                sci(r.peak_amplitude)
            )
        })
        .collect();
    save(
        &a.out,
        "dispersion.csv",
        "k_prime,measured_hz,exact_hz,dominance_dimensionless,amplitude_s",
        &rows,
    )?;
    save(&a.out, "summary.csv", "bin_hz", &[sci(res.bin_hz)])
}

fn cmd_two_particle(a: &RunArgs) -> Result<(), Failure> {
    let cfg = prepare_out(a)?;
    let res = pipeline_two_particle(&cfg).map_err(core_failure)?;
    let rows: Vec<String> = res
        .series_a
        .values()
        .iter()
        .zip(res.series_b.values())
        .enumerate()
        .map(|(i, (va, vb))| format!("{},{},{}", sci(res.series_a.time(i)), sci(*va), sci(*vb)))
        .collect();
    save(
        &a.out,
        "series.csv",
        "time_s,m2a_dimensionless,m2b_dimensionless",
        &rows,
    )?;
    save(
        &a.out,
        "spectrum_a.csv",
        "frequency_hz,amplitude_s",
        &spectrum_rows(&res.spectrum_a),
    )?;
    save(
        &a.out,
        "spectrum_b.csv",
        "frequency_hz,amplitude_s",
        &spectrum_rows(&res.spectrum_b),
    )?;
    save(
        &a.out,
        "peaks_a.csv",
        "frequency_hz,amplitude_s,interpolated",
        &peak_rows(&res.peaks_a),
    )?;
    save(
        &a.out,
        "peaks_b.csv",
        "frequency_hz,amplitude_s,interpolated",
        &peak_rows(&res.peaks_b),
    )?;
    let m = &res.markers;
    let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
    save(
        &a.out,
        "markers.csv",
        "nu_a_hz,nu_b_hz,nu_c_hz,f_nib_hz,f_nif_hz,bin_hz",
        &[format!(
            "{},{},{},{},{},{}",
            sci(m.nu_a),
            sci(m.nu_b),
            sci(m.nu_c),
            opt(m.f_nib),
            opt(m.f_nif),
            sci(res.bin_hz)
        )],
    )?;
    let gap_rows: Vec<String> = m.exact_gaps_hz.iter().map(|g| sci(*g)).collect();
    save(&a.out, "exact_gaps.csv", "gap_hz", &gap_rows)
}

fn cmd_ion_chain(a: &RunArgs) -> Result<(), Failure> {
    let cfg = prepare_out(a)?;
    let res = pipeline_ion_chain(&cfg).map_err(core_failure)?;
    let n = res.positions.len();
    let rows: Vec<String> = (0..n)
        .map(|i| format!("{},{}", i + 1, sci(res.positions[i])))
        .collect();
    save(&a.out, "positions.csv", "ion,position_dimensionless", &rows)?;
    let mut header = String::from("mode,frequency_hz");
    for j in 1..=n {
        header.push_str(&format!(",b_site_{j}_dimensionless"));
    }
    let rows: Vec<String> = (0..n)
        .map(|m| {
            let mut row = format!("{},{}", m + 1, sci(res.mode_freqs_hz[m]));
            for i in 0..n {
                row.push(',');
                row.push_str(&sci(res.mode_vectors[(i, m)]));
            }
            row
        })
        .collect();
    save(&a.out, "chain_modes.csv", &header, &rows)?;
    let mut rows = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for k in (i + 1)..n {
            rows.push(format!("{},{},{}", i + 1, k + 1, sci(res.coupling_hz[(i, k)])));
        }
    }
    save(&a.out, "coupling.csv", "site_i,site_k,coupling_hz", &rows)?;
    save(
        &a.out,
        "summary.csv",
        "fitted_j0_hz,fitted_alpha_dimensionless",
        &[format!("{},{}", sci(res.fitted_j0_hz), sci(res.fitted_alpha))],
    )
}

fn cmd_plot(a: &PlotArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&a.csv).map_err(io_failure("cannot read", &a.csv))?;
    let svg = plot::render(&text, a.kind)
        .map_err(|e| Failure::config(format!("cannot plot {}: {e}", a.csv.display())))?;
    std::fs::create_dir_all(&a.out).map_err(io_failure("cannot create", &a.out))?;
    let stem = a
        .csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".into());
    let path = a.out.join(format!("{stem}.svg"));
    std::fs::write(&path, svg).map_err(io_failure("cannot write", &path))
}
