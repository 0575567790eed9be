use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use eavesim::harness::{
    demo_constellation, manifest, render_plot, sweep, table2_study, write_csv, AxesSpec, ConfigFile, Metric,
    MetricsRecord, StudyConfig, SweepAxis, XAxis,
};

#[derive(Parser)]
#[command(name = "eavesim", version, about = "Precoding versus learning eavesdroppers in MU-MISO downlinks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; unset keys take their defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Channel realizations per point
    #[arg(long, global = true)]
    realizations: Option<usize>,
    /// Data frames per user per realization
    #[arg(long, global = true)]
    frames: Option<usize>,
    /// Worker threads; 0 uses every core, 1 runs serially
    #[arg(long, global = true, default_value_t = 0)]
    parallelism: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the configured point(s), ignoring any sweep axis
    Run,
    /// Simulate every point of the configured sweep and plot it
    Sweep,
    /// Noiseless constellations for ZF and CISPM
    Demo {
        /// Mean power and target SINR, dB
        #[arg(long, default_value_t = 5.0)]
        power_db: f64,
    },
    /// Every precoder and decoder at M = 9, 6 dB
    Table2,
}

fn load(common: &Common) -> Result<ConfigFile> {
    let mut file = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ConfigFile::parse(&text)?
        }
        None => ConfigFile::default(),
    };
    if common.seed.is_some() {
        file.seed = common.seed;
    }
    if common.realizations.is_some() {
        file.realizations = common.realizations;
    }
    if common.frames.is_some() {
        file.frames = common.frames;
    }
    Ok(file)
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn emit(dir: &Path, stem: &str, study: &StudyConfig, records: &[MetricsRecord], parallelism: usize) -> Result<()> {
    let mut csv = Vec::new();
    write_csv(records, &mut csv)?;
    write(dir, &format!("{stem}.csv"), &csv)?;
    write(dir, &format!("{stem}_manifest.toml"), manifest(study, records, parallelism)?.as_bytes())?;
    Ok(())
}

fn print_table(records: &[MetricsRecord]) {
    println!(
        "{:<11} {:<8} {:>3} {:>6} {:>9} {:>8} {:>8} {:>9} {:>9} {:>7}",
        "precoder", "decoder", "M", "gamma", "accuracy", "ber_eve", "fer_eve", "fer_user", "p_tot_dB", "infeas"
    );
    for r in records {
        println!(
            "{:<11} {:<8} {:>3} {:>6.2} {:>9.4} {:>8.4} {:>8.4} {:>9.4} {:>9.3} {:>7}",
            r.precoder.name(),
            r.decoder.name(),
            r.m,
            r.gamma_db,
            r.accuracy,
            r.ber_eve,
            r.fer_eve,
            r.fer_user,
            r.p_tot_db,
            r.infeasible_slots
        );
        if let Some(e) = &r.error {
            println!("    failed: {e}");
        }
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let c = &cli.common;
    fs::create_dir_all(&c.out_dir).with_context(|| format!("creating {}", c.out_dir.display()))?;
    let file = load(c)?;
    match cli.cmd {
        Cmd::Run => {
            let mut study = file.resolve()?;
            study.axis = None;
            let records = sweep(&study, c.parallelism)?;
            print_table(&records);
            emit(&c.out_dir, "run", &study, &records, c.parallelism)?;
        }
        Cmd::Sweep => {
            let study = file.resolve()?;
            let x = match &study.axis {
                Some(SweepAxis::Antennas(_)) => XAxis::Antennas,
                Some(SweepAxis::GammaDb(_)) => XAxis::GammaDb,
                None => bail!("sweep needs sweep_m or sweep_gamma_db in the config"),
            };
            let records = sweep(&study, c.parallelism)?;
            print_table(&records);
            let stem = study.base.scenario.clone();
            emit(&c.out_dir, &stem, &study, &records, c.parallelism)?;
            for (metric, tag) in [
                (Metric::BerEve, "ber_eve"),
                (Metric::FerEve, "fer_eve"),
                (Metric::FerUser, "fer_user"),
                (Metric::PowerDb, "p_tot"),
            ] {
                let axes = AxesSpec {
                    x,
                    y: metric,
                    title: format!("{stem}: {}", metric.label()),
                };
                write(&c.out_dir, &format!("{stem}_{tag}.svg"), render_plot(&records, &axes)?.as_bytes())?;
            }
        }
        Cmd::Demo { power_db } => {
            let mut file = file;
            file.gamma_db = Some(power_db);
            file.eta_db = Some(power_db);
            let study = file.resolve()?;
            let demo = demo_constellation(&study.base)?;
            let mut csv = Vec::new();
            demo.write_csv(&mut csv)?;
            write(&c.out_dir, "constellation.csv", &csv)?;
            write(&c.out_dir, "constellation.svg", demo.to_svg().as_bytes())?;
        }
        Cmd::Table2 => {
            let mut base = file.resolve()?.base;
            if file.m.is_none() {
                base.m = 9;
            }
            if file.gamma_db.is_none() {
                base.gamma_db = 6.0;
                base.eta_db = 6.0;
            }
            let study = table2_study(base);
            let records = sweep(&study, c.parallelism)?;
            print_table(&records);
            emit(&c.out_dir, "table2", &study, &records, c.parallelism)?;
        }
    }
    Ok(())
}
