//! Experiment configuration and its TOML file form.

use serde::{Deserialize, Serialize};

use crate::eavesdropper::MultiClassMode;
use crate::error::{Error, Result};
use crate::fec::ConvCode;
use crate::precoder::{EveMinObjective, PrecoderKind, PrecoderSpec, ZfNormalization};

/// Eve's decoding path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decoder {
    SoftBr,
    SoftCc,
    Hard,
}

impl Decoder {
    pub const ALL: [Decoder; 3] = [Decoder::SoftBr, Decoder::SoftCc, Decoder::Hard];

    pub fn name(&self) -> &'static str {
        match self {
            Decoder::SoftBr => "Soft-BR",
            Decoder::SoftCc => "Soft-CC",
            Decoder::Hard => "Hard",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "soft-br" | "softbr" | "br" => Ok(Decoder::SoftBr),
            "soft-cc" | "softcc" | "cc" => Ok(Decoder::SoftCc),
            "hard" | "mcc" => Ok(Decoder::Hard),
            _ => Err(Error::Config(format!("unknown decoder '{s}'"))),
        }
    }
}

/// Demapping used by the intended users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UserDecoder {
    #[default]
    Soft,
    Hard,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

/// One simulation point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub n_t: usize,
    pub k: usize,
    pub m: usize,
    pub precoder: PrecoderKind,
    pub decoder: Decoder,
    /// Inverse code rate, 3 or 4.
    pub rate: usize,
    /// Target SINR of every user, dB.
    pub gamma_db: f64,
    /// ZF power, dB; shares the SINR axis unless set separately.
    pub eta_db: f64,
    pub delta: f64,
    /// Data frames per user per realization.
    pub frames: usize,
    pub realizations: usize,
    pub pilot_symbols: usize,
    pub seed: u64,
    /// User whose symbols Eve attacks.
    pub target_user: usize,
    pub sigma_z2: f64,
    pub sigma_e2: f64,
    pub l2: f64,
    pub platt: bool,
    pub multiclass: MultiClassMode,
    pub zf_normalization: ZfNormalization,
    pub evemin_objective: EveMinObjective,
    /// Viterbi decision window; `None` traces back over the whole frame.
    pub traceback: Option<usize>,
    pub user_decoder: UserDecoder,
    /// Train and run the eavesdropper; off leaves only user-side metrics.
    pub eve_attack: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: "run".into(),
            n_t: 15,
            k: 6,
            m: 9,
            precoder: PrecoderKind::Zf,
            decoder: Decoder::SoftCc,
            rate: 3,
            gamma_db: 6.0,
            eta_db: 6.0,
            delta: 0.1,
            frames: 20,
            realizations: 20,
            pilot_symbols: 150,
            seed: 1,
            target_user: 0,
            sigma_z2: 1.0,
            sigma_e2: 1.0,
            l2: crate::eavesdropper::DEFAULT_L2,
            platt: false,
            multiclass: MultiClassMode::default(),
            zf_normalization: ZfNormalization::PerSlot,
            evemin_objective: EveMinObjective::SumOfNorms,
            traceback: None,
            user_decoder: UserDecoder::Soft,
            eve_attack: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_t", self.n_t),
            ("k", self.k),
            ("m", self.m),
            ("frames", self.frames),
            ("realizations", self.realizations),
            ("pilot_symbols", self.pilot_symbols),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.k > self.n_t {
            return Err(Error::Config(format!("K={} exceeds N_t={}", self.k, self.n_t)));
        }
        if self.target_user >= self.k {
            return Err(Error::Config(format!("target user {} out of range", self.target_user)));
        }
        if !(self.sigma_z2 > 0.0 && self.sigma_e2 > 0.0) {
            return Err(Error::Config("noise variances must be positive".into()));
        }
        if !self.gamma_db.is_finite() || !self.eta_db.is_finite() {
            return Err(Error::Config("SINR and power must be finite".into()));
        }
        let code = self.code()?;
        if self.pilot_symbols % (code.coded_bits() / 2) != 0 {
            return Err(Error::Config(format!(
                "pilot_symbols must be a multiple of the {}-symbol frame",
                code.coded_bits() / 2
            )));
        }
        self.precoder_spec().validate(self.k)
    }

    pub fn code(&self) -> Result<ConvCode> {
        Ok(ConvCode::for_rate(self.rate)?.with_window(self.traceback))
    }

    pub fn gamma_linear(&self) -> f64 {
        db_to_linear(self.gamma_db)
    }

    pub fn precoder_spec(&self) -> PrecoderSpec {
        let mut spec = PrecoderSpec::new(
            self.precoder,
            db_to_linear(self.eta_db),
            vec![self.gamma_linear(); self.k],
            self.delta,
        );
        spec.zf_normalization = self.zf_normalization;
        spec.evemin_objective = self.evemin_objective;
        spec
    }

    /// Total slots per coherence block.
    pub fn slots(&self) -> Result<usize> {
        Ok(self.pilot_symbols + self.frames * self.code()?.coded_bits() / 2)
    }
}

/// Sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    /// Eve antenna counts.
    Antennas(Vec<usize>),
    /// Shared SINR/power values in dB (`η = γ_k`).
    GammaDb(Vec<f64>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Antennas(_) => "M",
            SweepAxis::GammaDb(_) => "gamma_db",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            SweepAxis::Antennas(v) => v.len(),
            SweepAxis::GammaDb(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A set of points: the base config crossed with precoders, decoders and an
/// optional axis.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub base: ExperimentConfig,
    pub precoders: Vec<PrecoderKind>,
    pub decoders: Vec<Decoder>,
    pub axis: Option<SweepAxis>,
}

impl StudyConfig {
    pub fn single(base: ExperimentConfig) -> Self {
        StudyConfig {
            precoders: vec![base.precoder],
            decoders: vec![base.decoder],
            base,
            axis: None,
        }
    }

    /// Groups of configs that share transmissions and differ only in decoder.
    pub fn expand(&self) -> Result<Vec<Vec<ExperimentConfig>>> {
        if self.precoders.is_empty() || self.decoders.is_empty() {
            return Err(Error::Config("need at least one precoder and one decoder".into()));
        }
        let points: Vec<ExperimentConfig> = match &self.axis {
            None => vec![self.base.clone()],
            Some(axis) if axis.is_empty() => return Err(Error::Config("empty sweep list".into())),
            Some(SweepAxis::Antennas(ms)) => ms
                .iter()
                .map(|&m| ExperimentConfig { m, ..self.base.clone() })
                .collect(),
            Some(SweepAxis::GammaDb(gs)) => gs
                .iter()
                .map(|&g| ExperimentConfig {
                    gamma_db: g,
                    eta_db: g,
                    ..self.base.clone()
                })
                .collect(),
        };
        let mut groups = Vec::new();
        for p in &points {
            for &precoder in &self.precoders {
                let group: Vec<ExperimentConfig> = self
                    .decoders
                    .iter()
                    .map(|&decoder| ExperimentConfig {
                        precoder,
                        decoder,
                        ..p.clone()
                    })
                    .collect();
                for c in &group {
                    c.validate()?;
                }
                groups.push(group);
            }
        }
        Ok(groups)
    }
}

/// On-disk form. Every key is optional; missing keys take the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<String>,
    pub n_t: Option<usize>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub precoder: Option<String>,
    pub precoders: Option<Vec<String>>,
    pub decoder: Option<String>,
    pub decoders: Option<Vec<String>>,
    pub rate: Option<usize>,
    pub gamma_db: Option<f64>,
    pub eta_db: Option<f64>,
    pub delta: Option<f64>,
    pub frames: Option<usize>,
    pub realizations: Option<usize>,
    pub pilot_symbols: Option<usize>,
    pub seed: Option<u64>,
    pub target_user: Option<usize>,
    pub sigma_z2: Option<f64>,
    pub sigma_e2: Option<f64>,
    pub l2: Option<f64>,
    pub platt: Option<bool>,
    /// "softmax" or "ovr"
    pub multiclass: Option<String>,
    /// "slot" or "block"
    pub zf_normalization: Option<String>,
    /// "norms" or "squared"
    pub evemin_objective: Option<String>,
    pub traceback: Option<usize>,
    /// "soft" or "hard"
    pub user_decoder: Option<String>,
    pub eve_attack: Option<bool>,
    pub sweep_m: Option<Vec<usize>>,
    pub sweep_gamma_db: Option<Vec<f64>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self) -> Result<StudyConfig> {
        let d = ExperimentConfig::default();
        let sigma_z2 = self.sigma_z2.unwrap_or(d.sigma_z2);
        let gamma_db = self.gamma_db.unwrap_or(d.gamma_db);
        let mut base = ExperimentConfig {
            scenario: self.scenario.clone().unwrap_or(d.scenario.clone()),
            n_t: self.n_t.unwrap_or(d.n_t),
            k: self.k.unwrap_or(d.k),
            m: self.m.unwrap_or(d.m),
            rate: self.rate.unwrap_or(d.rate),
            gamma_db,
            eta_db: self.eta_db.unwrap_or(gamma_db),
            delta: self.delta.unwrap_or(sigma_z2 / 10.0),
            frames: self.frames.unwrap_or(d.frames),
            realizations: self.realizations.unwrap_or(d.realizations),
            pilot_symbols: self.pilot_symbols.unwrap_or(d.pilot_symbols),
            seed: self.seed.unwrap_or(d.seed),
            target_user: self.target_user.unwrap_or(d.target_user),
            sigma_z2,
            sigma_e2: self.sigma_e2.unwrap_or(d.sigma_e2),
            l2: self.l2.unwrap_or(d.l2),
            platt: self.platt.unwrap_or(d.platt),
            traceback: self.traceback,
            eve_attack: self.eve_attack.unwrap_or(d.eve_attack),
            ..d
        };
        if let Some(s) = &self.zf_normalization {
            base.zf_normalization = match s.as_str() {
                "slot" => ZfNormalization::PerSlot,
                "block" => ZfNormalization::PerBlock,
                _ => return Err(Error::Config(format!("zf_normalization must be slot or block, got '{s}'"))),
            };
        }
        if let Some(s) = &self.evemin_objective {
            base.evemin_objective = match s.as_str() {
                "norms" => EveMinObjective::SumOfNorms,
                "squared" => EveMinObjective::SquaredSurrogate,
                _ => return Err(Error::Config(format!("evemin_objective must be norms or squared, got '{s}'"))),
            };
        }
        if let Some(s) = &self.multiclass {
            base.multiclass = match s.as_str() {
                "softmax" => MultiClassMode::Multinomial,
                "ovr" => MultiClassMode::OneVsRest,
                _ => return Err(Error::Config(format!("multiclass must be softmax or ovr, got '{s}'"))),
            };
        }
        if let Some(s) = &self.user_decoder {
            base.user_decoder = match s.as_str() {
                "soft" => UserDecoder::Soft,
                "hard" => UserDecoder::Hard,
                _ => return Err(Error::Config(format!("user_decoder must be soft or hard, got '{s}'"))),
            };
        }
        let precoders = match (&self.precoders, &self.precoder) {
            (Some(list), _) => list.iter().map(|s| PrecoderKind::parse(s)).collect::<Result<Vec<_>>>()?,
            (None, Some(p)) => vec![PrecoderKind::parse(p)?],
            (None, None) => vec![base.precoder],
        };
        let decoders = match (&self.decoders, &self.decoder) {
            (Some(list), _) => list.iter().map(|s| Decoder::parse(s)).collect::<Result<Vec<_>>>()?,
            (None, Some(p)) => vec![Decoder::parse(p)?],
            (None, None) => vec![base.decoder],
        };
        base.precoder = *precoders.first().ok_or_else(|| Error::Config("empty precoder list".into()))?;
        base.decoder = *decoders.first().ok_or_else(|| Error::Config("empty decoder list".into()))?;
        let axis = match (&self.sweep_m, &self.sweep_gamma_db) {
            (Some(_), Some(_)) => return Err(Error::Config("sweep over one axis at a time".into())),
            (Some(m), None) => Some(SweepAxis::Antennas(m.clone())),
            (None, Some(g)) => Some(SweepAxis::GammaDb(g.clone())),
            (None, None) => None,
        };
        base.validate()?;
        Ok(StudyConfig {
            base,
            precoders,
            decoders,
            axis,
        })
    }
}

impl StudyConfig {
    /// Fully resolved file form, suitable for writing back out.
    pub fn to_file(&self) -> ConfigFile {
        let b = &self.base;
        let (sweep_m, sweep_gamma_db) = match &self.axis {
            Some(SweepAxis::Antennas(m)) => (Some(m.clone()), None),
            Some(SweepAxis::GammaDb(g)) => (None, Some(g.clone())),
            None => (None, None),
        };
        ConfigFile {
            scenario: Some(b.scenario.clone()),
            n_t: Some(b.n_t),
            k: Some(b.k),
            m: Some(b.m),
            precoder: None,
            precoders: Some(self.precoders.iter().map(|p| p.name().to_string()).collect()),
            decoder: None,
            decoders: Some(self.decoders.iter().map(|d| d.name().to_string()).collect()),
            rate: Some(b.rate),
            gamma_db: Some(b.gamma_db),
            eta_db: Some(b.eta_db),
            delta: Some(b.delta),
            frames: Some(b.frames),
            realizations: Some(b.realizations),
            pilot_symbols: Some(b.pilot_symbols),
            seed: Some(b.seed),
            target_user: Some(b.target_user),
            sigma_z2: Some(b.sigma_z2),
            sigma_e2: Some(b.sigma_e2),
            l2: Some(b.l2),
            platt: Some(b.platt),
            multiclass: Some(
                match b.multiclass {
                    MultiClassMode::Multinomial => "softmax",
                    MultiClassMode::OneVsRest => "ovr",
                }
                .into(),
            ),
            zf_normalization: Some(
                match b.zf_normalization {
                    ZfNormalization::PerSlot => "slot",
                    ZfNormalization::PerBlock => "block",
                }
                .into(),
            ),
            evemin_objective: Some(
                match b.evemin_objective {
                    EveMinObjective::SumOfNorms => "norms",
                    EveMinObjective::SquaredSurrogate => "squared",
                }
                .into(),
            ),
            traceback: b.traceback,
            user_decoder: Some(
                match b.user_decoder {
                    UserDecoder::Soft => "soft",
                    UserDecoder::Hard => "hard",
                }
                .into(),
            ),
            eve_attack: Some(b.eve_attack),
            sweep_m,
            sweep_gamma_db,
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&self.to_file()).map_err(|e| Error::Config(e.to_string()))
    }
}
