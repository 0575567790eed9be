//! Error-rate counting and the per-point record written to CSV.

use std::io::Write;

use crate::error::{check_len, Error, Result};
use crate::precoder::PrecoderKind;

use super::config::{Decoder, ExperimentConfig};

/// Hamming distance over length.
pub fn compute_ber(reference: &[u8], estimate: &[u8]) -> Result<f64> {
    check_len(reference.len(), estimate.len())?;
    if reference.is_empty() {
        return Err(Error::Input("no bits to compare".into()));
    }
    Ok(bit_errors(reference, estimate) as f64 / reference.len() as f64)
}

pub(crate) fn bit_errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Fraction of frames with at least one wrong bit.
pub fn compute_fer<A: AsRef<[u8]>, B: AsRef<[u8]>>(reference: &[A], estimate: &[B]) -> Result<f64> {
    check_len(reference.len(), estimate.len())?;
    if reference.is_empty() {
        return Err(Error::Input("no frames to compare".into()));
    }
    let mut bad = 0;
    for (r, e) in reference.iter().zip(estimate) {
        let (r, e) = (r.as_ref(), e.as_ref());
        check_len(r.len(), e.len())?;
        bad += (r != e) as usize;
    }
    Ok(bad as f64 / reference.len() as f64)
}

/// Raw counts from one realization; summing them is order-independent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tally {
    pub eve_bit_errors: usize,
    pub eve_bits: usize,
    pub eve_frame_errors: usize,
    pub eve_frames: usize,
    pub eve_coded_errors: usize,
    pub eve_coded_bits: usize,
    pub user_bit_errors: usize,
    pub user_bits: usize,
    pub user_frame_errors: usize,
    pub user_frames: usize,
    pub power_sum: f64,
    pub power_slots: usize,
    pub infeasible_slots: usize,
    pub nonoptimal_slots: usize,
    pub solver_iterations: usize,
}

impl Tally {
    pub fn add(&mut self, o: &Tally) {
        self.eve_bit_errors += o.eve_bit_errors;
        self.eve_bits += o.eve_bits;
        self.eve_frame_errors += o.eve_frame_errors;
        self.eve_frames += o.eve_frames;
        self.eve_coded_errors += o.eve_coded_errors;
        self.eve_coded_bits += o.eve_coded_bits;
        self.user_bit_errors += o.user_bit_errors;
        self.user_bits += o.user_bits;
        self.user_frame_errors += o.user_frame_errors;
        self.user_frames += o.user_frames;
        self.power_sum += o.power_sum;
        self.power_slots += o.power_slots;
        self.infeasible_slots += o.infeasible_slots;
        self.nonoptimal_slots += o.nonoptimal_slots;
        self.solver_iterations += o.solver_iterations;
    }

    fn eve_ber(&self) -> f64 {
        ratio(self.eve_bit_errors, self.eve_bits)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// One simulated point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub scenario: String,
    pub precoder: PrecoderKind,
    pub decoder: Decoder,
    pub n_t: usize,
    pub k: usize,
    pub m: usize,
    pub rate: usize,
    pub gamma_db: f64,
    pub delta: f64,
    pub realizations: usize,
    pub frames: usize,
    pub seed: u64,
    /// Pre-decoding coded-bit accuracy at Eve.
    pub accuracy: f64,
    pub ber_eve: f64,
    pub fer_eve: f64,
    /// Standard error of `ber_eve` across realizations.
    pub ber_eve_se: f64,
    pub ber_user: f64,
    pub fer_user: f64,
    pub p_tot_db: f64,
    pub infeasible_slots: usize,
    /// Slots where the solver returned without a KKT certificate.
    pub nonoptimal_slots: usize,
    pub mean_iterations: f64,
    pub generators_octal: String,
    /// Set when the point could not be simulated; metrics are then NaN.
    pub error: Option<String>,
}

impl MetricsRecord {
    pub(crate) fn from_tallies(cfg: &ExperimentConfig, per_realization: &[Tally]) -> Result<Self> {
        let mut t = Tally::default();
        for r in per_realization {
            t.add(r);
        }
        let n = per_realization.len() as f64;
        let bers: Vec<f64> = per_realization.iter().map(Tally::eve_ber).collect();
        let ber_eve_se = if per_realization.len() > 1 && bers.iter().all(|b| b.is_finite()) {
            let mean = bers.iter().sum::<f64>() / n;
            let var = bers.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            f64::NAN
        };
        let mut rec = Self::empty(cfg);
        rec.accuracy = 1.0 - ratio(t.eve_coded_errors, t.eve_coded_bits);
        rec.ber_eve = t.eve_ber();
        rec.fer_eve = ratio(t.eve_frame_errors, t.eve_frames);
        rec.ber_eve_se = ber_eve_se;
        rec.ber_user = ratio(t.user_bit_errors, t.user_bits);
        rec.fer_user = ratio(t.user_frame_errors, t.user_frames);
        rec.p_tot_db = 10.0 * (t.power_sum / t.power_slots as f64).log10();
        rec.infeasible_slots = t.infeasible_slots;
        rec.nonoptimal_slots = t.nonoptimal_slots;
        rec.mean_iterations = t.solver_iterations as f64 / t.power_slots.max(1) as f64;
        Ok(rec)
    }

    /// Record carrying only the configuration echo; metrics are NaN.
    pub fn empty(cfg: &ExperimentConfig) -> Self {
        MetricsRecord {
            scenario: cfg.scenario.clone(),
            precoder: cfg.precoder,
            decoder: cfg.decoder,
            n_t: cfg.n_t,
            k: cfg.k,
            m: cfg.m,
            rate: cfg.rate,
            gamma_db: cfg.gamma_db,
            delta: cfg.delta,
            realizations: cfg.realizations,
            frames: cfg.frames,
            seed: cfg.seed,
            accuracy: f64::NAN,
            ber_eve: f64::NAN,
            fer_eve: f64::NAN,
            ber_eve_se: f64::NAN,
            ber_user: f64::NAN,
            fer_user: f64::NAN,
            p_tot_db: f64::NAN,
            infeasible_slots: 0,
            nonoptimal_slots: 0,
            mean_iterations: f64::NAN,
            generators_octal: cfg.code().map(|c| c.generators_octal()).unwrap_or_default(),
            error: None,
        }
    }

    pub(crate) fn failed(cfg: &ExperimentConfig, err: &Error) -> Self {
        let mut rec = Self::empty(cfg);
        rec.error = Some(err.to_string());
        rec
    }
}

/// CSV header. The first twenty columns are the stable schema; the rest
/// are diagnostics appended after it.
pub const CSV_HEADER: [&str; 24] = [
    "scenario",
    "precoder",
    "decoder",
    "N_t",
    "K",
    "M",
    "rate",
    "gamma_db",
    "delta",
    "n_realizations",
    "frames",
    "seed",
    "accuracy",
    "ber_eve",
    "fer_eve",
    "ber_user",
    "fer_user",
    "p_tot_db",
    "infeasible_slots",
    "generators_octal",
    "ber_eve_se",
    "nonoptimal_slots",
    "mean_solver_iterations",
    "error",
];

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_csv<W: Write>(records: &[MetricsRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record([
            r.scenario.clone(),
            r.precoder.name().to_string(),
            r.decoder.name().to_string(),
            r.n_t.to_string(),
            r.k.to_string(),
            r.m.to_string(),
            r.rate.to_string(),
            num(r.gamma_db),
            num(r.delta),
            r.realizations.to_string(),
            r.frames.to_string(),
            r.seed.to_string(),
            num(r.accuracy),
            num(r.ber_eve),
            num(r.fer_eve),
            num(r.ber_user),
            num(r.fer_user),
            num(r.p_tot_db),
            r.infeasible_slots.to_string(),
            r.generators_octal.clone(),
            num(r.ber_eve_se),
            r.nonoptimal_slots.to_string(),
            num(r.mean_iterations),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
