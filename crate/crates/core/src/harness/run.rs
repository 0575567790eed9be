//! Monte-Carlo driver: one coherence block per realization.

use crate::channel::{receive_eve, receive_users, sample_channel};
use crate::eavesdropper::{attack_hard, attack_soft, build_training_set, fit_attacker_with, FitOptions, Strategy};
use crate::error::{Error, Result};
use crate::modem::{generate_pilot_block, CoherenceBlock, Frame, FrameRole};
use crate::numerics::{CMatrix, CVector, SeededRng, C64};
use crate::par::par_map;
use crate::precoder::{Precoder, PrecoderKind};
use crate::solver::SolveStatus;

use super::config::{Decoder, ExperimentConfig, StudyConfig};
use super::metrics::{bit_errors, MetricsRecord, Tally};
use super::receiver::decode_user;

// Substream tags under (seed, realization).
const CHANNEL: u64 = 0;
const PILOTS: u64 = 1;
const DATA: u64 = 2;
const PRECODER: u64 = 3;
const USER_NOISE: u64 = 4;
const EVE_NOISE: u64 = 5;

fn strategy(d: Decoder) -> Strategy {
    match d {
        Decoder::SoftBr => Strategy::BinaryRelevance,
        Decoder::SoftCc => Strategy::ClassifierChain,
        Decoder::Hard => Strategy::MultiClass,
    }
}

/// Transmissions of one realization as seen by every receiver.
pub struct Realization {
    pub block: CoherenceBlock,
    /// Eve's noisy observations, one row per slot, pilots first.
    pub y_eve: CMatrix,
    /// Noisy observations of each user over the data slots.
    pub y_users: Vec<Vec<C64>>,
    pub tally: Tally,
}

/// Simulate realization `r`: transmit pilots and data and record what
/// the users and Eve receive. Eve-side counts are left at zero.
pub fn transmit(cfg: &ExperimentConfig, r: usize) -> Result<Realization> {
    let base = SeededRng::new(cfg.seed, r as u64);
    let code = cfg.code()?;
    let ch = sample_channel(&mut base.substream(CHANNEL), cfg.k, cfg.n_t, cfg.m, cfg.sigma_z2, cfg.sigma_e2)?;
    let pilots = generate_pilot_block(&base.substream(PILOTS), cfg.k, cfg.pilot_symbols, &code)?;
    let data_rng = base.substream(DATA);
    let data = (0..cfg.k)
        .map(|u| {
            let mut rng = data_rng.substream(u as u64);
            (0..cfg.frames)
                .map(|_| Frame::random(&mut rng, &code, FrameRole::Data, u))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let block = CoherenceBlock { pilots, data };
    let slots: Vec<CVector> = (0..block.total_slots()).map(|n| block.slot_symbols(n)).collect();
    let precoder = Precoder::new(&cfg.precoder_spec(), &ch)?;
    let solved = precoder.precode_block(&slots, &mut base.substream(PRECODER))?;

    let np = cfg.pilot_symbols;
    let mut tally = Tally::default();
    for s in &solved[np..] {
        tally.power_sum += s.x.norm_sqr();
        tally.power_slots += 1;
        tally.infeasible_slots += s.fallback as usize;
        tally.nonoptimal_slots += (s.status != SolveStatus::Optimal) as usize;
        tally.solver_iterations += s.iterations;
    }

    let mut user_noise = base.substream(USER_NOISE);
    let mut eve_noise = base.substream(EVE_NOISE);
    let mut y_users = vec![Vec::with_capacity(solved.len() - np); cfg.k];
    let mut eve = Vec::with_capacity(solved.len() * cfg.m);
    for (n, s) in solved.iter().enumerate() {
        eve.extend(receive_eve(&ch, &s.x, Some(&mut eve_noise))?.into_inner());
        if n >= np {
            let y = receive_users(&ch, &s.x, Some(&mut user_noise))?;
            for (u, v) in y.iter().enumerate() {
                y_users[u].push(*v);
            }
        }
    }
    Ok(Realization {
        block,
        y_eve: CMatrix::new(solved.len(), cfg.m, eve)?,
        y_users,
        tally,
    })
}

/// Conventional decoding at every intended user.
pub fn score_users(cfg: &ExperimentConfig, real: &Realization) -> Result<Tally> {
    let code = cfg.code()?;
    let mut t = Tally::default();
    for (u, y) in real.y_users.iter().enumerate() {
        let decoded = decode_user(y, &code, cfg.user_decoder, cfg.gamma_linear(), cfg.sigma_z2.sqrt())?;
        for (frame, est) in real.block.data[u].iter().zip(&decoded) {
            let e = bit_errors(&frame.info_bits, est);
            t.user_bit_errors += e;
            t.user_bits += est.len();
            t.user_frame_errors += (e > 0) as usize;
            t.user_frames += 1;
        }
    }
    Ok(t)
}

/// Train Eve on the pilots of the target user and attack its data frames,
/// once per decoder.
pub fn score_eve(cfg: &ExperimentConfig, decoders: &[Decoder], real: &Realization) -> Result<Vec<Tally>> {
    let code = cfg.code()?;
    let k = cfg.target_user;
    let np = cfg.pilot_symbols;
    let rows = real.y_eve.rows();
    let m = real.y_eve.cols();
    let pilot_rows = CMatrix::new(np, m, real.y_eve.as_slice()[..np * m].to_vec())?;
    let data_rows = CMatrix::new(rows - np, m, real.y_eve.as_slice()[np * m..].to_vec())?;
    let train = build_training_set(&pilot_rows, &real.block.pilots[k])?;
    let opts = FitOptions {
        l2: cfg.l2,
        calibrate: cfg.platt,
        multiclass: cfg.multiclass,
    };
    let frames = &real.block.data[k];
    let truth: Vec<u8> = frames.iter().flat_map(|f| f.info_bits.iter().copied()).collect();
    let coded: Vec<u8> = frames.iter().flat_map(|f| f.coded_bits.iter().copied()).collect();
    let mut trained: Vec<(Strategy, crate::eavesdropper::TrainedAttacker)> = Vec::new();
    let mut out = Vec::with_capacity(decoders.len());
    for &d in decoders {
        let s = strategy(d);
        if !trained.iter().any(|(t, _)| *t == s) {
            trained.push((s, fit_attacker_with(&train, s, opts)?));
        }
        let att = &trained.iter().find(|(t, _)| *t == s).expect("trained above").1;
        let res = match d {
            Decoder::Hard => attack_hard(att, &data_rows, &code)?,
            _ => attack_soft(att, &data_rows, &code)?,
        };
        let mut t = Tally {
            eve_bit_errors: bit_errors(&truth, &res.payload),
            eve_bits: truth.len(),
            eve_coded_errors: bit_errors(&coded, &res.coded_decisions),
            eve_coded_bits: coded.len(),
            ..Tally::default()
        };
        for (a, b) in truth.chunks(code.payload_bits()).zip(res.payload.chunks(code.payload_bits())) {
            t.eve_frame_errors += (a != b) as usize;
            t.eve_frames += 1;
        }
        out.push(t);
    }
    Ok(out)
}

fn realization_tallies(cfg: &ExperimentConfig, decoders: &[Decoder], r: usize) -> Result<Vec<Tally>> {
    let real = transmit(cfg, r)?;
    let mut common = real.tally.clone();
    common.add(&score_users(cfg, &real)?);
    if !cfg.eve_attack {
        return Ok(vec![common; decoders.len()]);
    }
    let eve = score_eve(cfg, decoders, &real)?;
    Ok(eve
        .into_iter()
        .map(|mut t| {
            t.add(&common);
            t
        })
        .collect())
}

/// Simulate one point, scoring Eve with every decoder in `decoders` on the
/// same transmissions. Returns one record per decoder.
pub fn run_point_multi(cfg: &ExperimentConfig, decoders: &[Decoder], parallelism: usize) -> Result<Vec<MetricsRecord>> {
    cfg.validate()?;
    if decoders.is_empty() {
        return Err(Error::Config("no decoder to evaluate".into()));
    }
    let per_real = par_map((0..cfg.realizations).collect(), parallelism, |r| {
        realization_tallies(cfg, decoders, r)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    decoders
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let c = ExperimentConfig {
                decoder: d,
                ..cfg.clone()
            };
            let tallies: Vec<Tally> = per_real.iter().map(|v| v[i].clone()).collect();
            MetricsRecord::from_tallies(&c, &tallies)
        })
        .collect()
}

/// Simulate one point with its configured decoder, on all cores.
pub fn run_point(cfg: &ExperimentConfig) -> Result<MetricsRecord> {
    run_point_with(cfg, 0)
}

pub fn run_point_with(cfg: &ExperimentConfig, parallelism: usize) -> Result<MetricsRecord> {
    Ok(run_point_multi(cfg, &[cfg.decoder], parallelism)?.remove(0))
}

/// Run every point of `study`. Configuration errors abort; a point that
/// fails during simulation yields a row with its error message and NaN
/// metrics.
pub fn sweep(study: &StudyConfig, parallelism: usize) -> Result<Vec<MetricsRecord>> {
    let groups = study.expand()?;
    let mut out = Vec::new();
    for group in groups {
        let decoders: Vec<Decoder> = group.iter().map(|c| c.decoder).collect();
        match run_point_multi(&group[0], &decoders, parallelism) {
            Ok(recs) => out.extend(recs),
            Err(e) => {
                log::warn!("point {} {} M={} failed: {e}", group[0].precoder.name(), group[0].gamma_db, group[0].m);
                out.extend(group.iter().map(|c| MetricsRecord::failed(c, &e)));
            }
        }
    }
    Ok(out)
}

/// Every precoder with every decoder at a single operating point.
pub fn table2_study(base: ExperimentConfig) -> StudyConfig {
    StudyConfig {
        base: ExperimentConfig {
            scenario: "table2".into(),
            ..base
        },
        precoders: PrecoderKind::ALL.to_vec(),
        decoders: Decoder::ALL.to_vec(),
        axis: None,
    }
}
