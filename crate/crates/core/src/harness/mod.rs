//! Experiment orchestration: configuration, Monte-Carlo runs, metrics,
//! CSV and SVG output.

pub mod config;
pub mod demo;
pub mod metrics;
pub mod plot;
pub mod receiver;
pub mod run;
mod svg;

pub use config::{ConfigFile, Decoder, ExperimentConfig, StudyConfig, SweepAxis, UserDecoder};
pub use demo::{demo_constellation, Constellation, Observer};
pub use metrics::{compute_ber, compute_fer, write_csv, MetricsRecord, CSV_HEADER};
pub use plot::{render_plot, AxesSpec, Metric, XAxis};
pub use run::{run_point, run_point_multi, run_point_with, sweep, table2_study};

use std::fmt::Write as _;

/// Text manifest of a run: the resolved configuration in loadable TOML
/// form followed by per-point solver telemetry as comments.
pub fn manifest(study: &StudyConfig, records: &[MetricsRecord], parallelism: usize) -> crate::Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "# eavesim {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(
        s,
        "# parallel build: {}, parallelism: {parallelism}",
        crate::par::parallel_enabled()
    );
    s.push_str(&study.to_toml()?);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "# {} {} M={} gamma_db={}: infeasible={} nonoptimal={} mean_iterations={:.2}{}",
            r.precoder.name(),
            r.decoder.name(),
            r.m,
            r.gamma_db,
            r.infeasible_slots,
            r.nonoptimal_slots,
            r.mean_iterations,
            r.error.as_deref().map(|e| format!(" error={e}")).unwrap_or_default()
        );
    }
    Ok(s)
}
