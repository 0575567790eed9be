//! The eavesdropper: learns user `k`'s coded bits from precoded pilots seen
//! through its own channel, then turns predictions on data slots into
//! decoded payloads.

mod logreg;
mod platt;
mod softmax;

use std::io::Write;

pub use logreg::{
    fit_logreg, fit_logreg_with, logreg_loss, predict_proba, BinaryClassifier, FitOptions, MultiClassMode, DEFAULT_L2,
    PROB_CLIP,
};
pub use softmax::{fit_softmax, SoftmaxClassifier};
pub use platt::{platt_fit, FOLDS};

use crate::error::{check_len, Error, Result};
use crate::fec::{viterbi_hard, viterbi_soft, ConvCode, LlrFrame};
use crate::modem::{bits_to_index, index_to_bits, Frame};
use crate::numerics::{real_embed, CMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    /// Row-major `N × dim`.
    pub features: Vec<f64>,
    pub dim: usize,
    pub labels_bits: Vec<[u8; 2]>,
    pub labels_class: Vec<usize>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.labels_class.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels_class.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    fn bit_column(&self, b: usize) -> Vec<u8> {
        self.labels_bits.iter().map(|p| p[b]).collect()
    }
}

/// Real-embedded rows of an `N × M` matrix of received slots.
pub fn embed_rows(y: &CMatrix) -> Vec<f64> {
    (0..y.rows()).flat_map(|r| real_embed(y.row(r))).collect()
}

/// Pair Eve's received pilot slots with the target user's pilot symbols.
pub fn build_training_set(y_e_pilot: &CMatrix, frames: &[Frame]) -> Result<TrainingSet> {
    let bits: Vec<u8> = frames.iter().flat_map(|f| f.coded_bits.iter().copied()).collect();
    check_len(2 * y_e_pilot.rows(), bits.len())?;
    let labels_bits: Vec<[u8; 2]> = bits.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
    Ok(TrainingSet {
        features: embed_rows(y_e_pilot),
        dim: 2 * y_e_pilot.cols(),
        labels_class: labels_bits.iter().map(|p| bits_to_index(p[0], p[1])).collect(),
        labels_bits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// One independent classifier per bit.
    BinaryRelevance,
    /// Bit 1 also sees bit 0.
    ClassifierChain,
    /// One-vs-rest over the four symbols.
    MultiClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedAttacker {
    pub strategy: Strategy,
    /// Binary models: two per-bit ones, or four one-vs-rest ones.
    pub classifiers: Vec<BinaryClassifier>,
    /// Set for a multinomial four-symbol model.
    pub softmax: Option<SoftmaxClassifier>,
    pub dim: usize,
}

pub fn fit_attacker(d: &TrainingSet, strategy: Strategy) -> Result<TrainedAttacker> {
    fit_attacker_with(d, strategy, FitOptions::default())
}

pub fn fit_attacker_with(d: &TrainingSet, strategy: Strategy, opts: FitOptions) -> Result<TrainedAttacker> {
    if d.is_empty() {
        return Err(Error::Input("empty training set".into()));
    }
    if strategy == Strategy::MultiClass && opts.multiclass == MultiClassMode::Multinomial {
        return Ok(TrainedAttacker {
            strategy,
            classifiers: Vec::new(),
            softmax: Some(fit_softmax(&d.features, d.dim, &d.labels_class, 4, opts.l2)?),
            dim: d.dim,
        });
    }
    let classifiers = match strategy {
        Strategy::BinaryRelevance => (0..2)
            .map(|b| fit_logreg_with(&d.features, d.dim, &d.bit_column(b), opts))
            .collect::<Result<_>>()?,
        Strategy::ClassifierChain => {
            let bit0 = d.bit_column(0);
            let first = fit_logreg_with(&d.features, d.dim, &bit0, opts)?;
            let chained = chain_features(&d.features, d.dim, bit0.iter().map(|&b| b as f64));
            let second = fit_logreg_with(&chained, d.dim + 1, &d.bit_column(1), opts)?;
            vec![first, second]
        }
        Strategy::MultiClass => (0..4)
            .map(|c| {
                let y: Vec<u8> = d.labels_class.iter().map(|&l| (l == c) as u8).collect();
                fit_logreg_with(&d.features, d.dim, &y, opts)
            })
            .collect::<Result<_>>()?,
    };
    Ok(TrainedAttacker {
        strategy,
        classifiers,
        softmax: None,
        dim: d.dim,
    })
}

fn chain_features(features: &[f64], dim: usize, extra: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(features.len() + features.len() / dim.max(1));
    for (row, e) in features.chunks_exact(dim).zip(extra) {
        out.extend_from_slice(row);
        out.push(e);
    }
    out
}

/// `ln((1 − q₁)/q₁)`; positive favours bit 0.
pub fn llr_from_proba(q1: f64) -> f64 {
    let q = q1.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    ((1.0 - q) / q).ln()
}

impl TrainedAttacker {
    /// Probability of a 1 for each of the two bits of one slot.
    pub fn bit_probabilities(&self, row: &[f64]) -> Result<[f64; 2]> {
        check_len(self.dim, row.len())?;
        match self.strategy {
            Strategy::BinaryRelevance => Ok([
                predict_proba(&self.classifiers[0], row),
                predict_proba(&self.classifiers[1], row),
            ]),
            Strategy::ClassifierChain => {
                let q0 = predict_proba(&self.classifiers[0], row);
                let mut ext = row.to_vec();
                ext.push((q0 > 0.5) as u8 as f64);
                Ok([q0, predict_proba(&self.classifiers[1], &ext)])
            }
            Strategy::MultiClass => {
                let p = self.class_scores(row)?;
                let total: f64 = p.iter().sum();
                // marginals of the normalized one-vs-rest outputs
                let q0 = (p[bits_to_index(1, 0)] + p[bits_to_index(1, 1)]) / total;
                let q1 = (p[bits_to_index(0, 1)] + p[bits_to_index(1, 1)]) / total;
                Ok([q0, q1])
            }
        }
    }

    fn class_scores(&self, row: &[f64]) -> Result<[f64; 4]> {
        check_len(self.dim, row.len())?;
        if self.strategy != Strategy::MultiClass {
            let q = self.bit_probabilities(row)?;
            let mut p = [0.0; 4];
            for (c, pc) in p.iter_mut().enumerate() {
                let b = index_to_bits(c);
                *pc = (if b[0] == 1 { q[0] } else { 1.0 - q[0] }) * (if b[1] == 1 { q[1] } else { 1.0 - q[1] });
            }
            return Ok(p);
        }
        let mut p = [0.0; 4];
        if let Some(sm) = &self.softmax {
            p.copy_from_slice(&sm.predict_proba(row));
            return Ok(p);
        }
        for (pc, c) in p.iter_mut().zip(&self.classifiers) {
            *pc = predict_proba(c, row);
        }
        Ok(p)
    }

    /// Most likely symbol index for one slot.
    pub fn predict_class(&self, row: &[f64]) -> Result<usize> {
        let p = self.class_scores(row)?;
        let mut best = 0;
        for c in 1..4 {
            if p[c] > p[best] {
                best = c;
            }
        }
        Ok(best)
    }

    /// Hard bit decisions for one slot, before any decoding.
    pub fn predict_bits(&self, row: &[f64]) -> Result<[u8; 2]> {
        match self.strategy {
            Strategy::MultiClass => Ok(index_to_bits(self.predict_class(row)?)),
            _ => {
                let q = self.bit_probabilities(row)?;
                Ok([(q[0] > 0.5) as u8, (q[1] > 0.5) as u8])
            }
        }
    }

    /// CSV dump: one line per classifier with its role, calibration,
    /// priors, bias and weights.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
        out.write_record(["strategy", "index", "calib_a", "calib_b", "prior0", "prior1", "bias", "weights..."])?;
        for (i, c) in self.classifiers.iter().enumerate() {
            let mut rec = vec![
                format!("{:?}", self.strategy),
                i.to_string(),
                format!("{:e}", c.calib_a),
                format!("{:e}", c.calib_b),
                format!("{:e}", c.priors.0),
                format!("{:e}", c.priors.1),
                format!("{:e}", c.bias),
            ];
            rec.extend(c.weights.iter().map(|v| format!("{v:e}")));
            out.write_record(&rec)?;
        }
        if let Some(sm) = &self.softmax {
            for c in 0..sm.classes {
                let mut rec = vec![
                    "Softmax".to_string(),
                    c.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("{:e}", sm.biases[c]),
                ];
                rec.extend(sm.weights[c * sm.dim..(c + 1) * sm.dim].iter().map(|v| format!("{v:e}")));
                out.write_record(&rec)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Output of an attack on a run of data frames.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutput {
    /// Decoded payload bits, frames concatenated.
    pub payload: Vec<u8>,
    /// Pre-decoding hard decisions on the coded bits.
    pub coded_decisions: Vec<u8>,
}

fn slots_per_frame(code: &ConvCode, rows: usize) -> Result<usize> {
    let per = code.coded_bits() / 2;
    if code.coded_bits() % 2 != 0 || rows % per != 0 {
        return Err(Error::Framing(format!("{rows} slots is not a whole number of {per}-slot frames")));
    }
    Ok(per)
}

/// Per-bit LLRs from the soft classifiers, then soft Viterbi per frame.
pub fn attack_soft(att: &TrainedAttacker, y_e_data: &CMatrix, code: &ConvCode) -> Result<AttackOutput> {
    if att.strategy == Strategy::MultiClass {
        return Err(Error::Config("soft attack needs a per-bit attacker".into()));
    }
    check_len(att.dim, 2 * y_e_data.cols())?;
    let per = slots_per_frame(code, y_e_data.rows())?;
    let feats = embed_rows(y_e_data);
    let mut llrs = Vec::with_capacity(2 * y_e_data.rows());
    let mut coded_decisions = Vec::with_capacity(2 * y_e_data.rows());
    for row in feats.chunks_exact(att.dim) {
        let q = att.bit_probabilities(row)?;
        for qb in q {
            llrs.push(llr_from_proba(qb));
            coded_decisions.push((qb > 0.5) as u8);
        }
    }
    let mut payload = Vec::new();
    for frame in llrs.chunks_exact(2 * per) {
        payload.extend(viterbi_soft(code, &LlrFrame(frame.to_vec()))?);
    }
    Ok(AttackOutput {
        payload,
        coded_decisions,
    })
}

/// Symbol decisions mapped to bits, then hard Viterbi per frame.
pub fn attack_hard(att: &TrainedAttacker, y_e_data: &CMatrix, code: &ConvCode) -> Result<AttackOutput> {
    check_len(att.dim, 2 * y_e_data.cols())?;
    let per = slots_per_frame(code, y_e_data.rows())?;
    let feats = embed_rows(y_e_data);
    let mut coded_decisions = Vec::with_capacity(2 * y_e_data.rows());
    for row in feats.chunks_exact(att.dim) {
        coded_decisions.extend(index_to_bits(att.predict_class(row)?));
    }
    let mut payload = Vec::new();
    for frame in coded_decisions.chunks_exact(2 * per) {
        payload.extend(viterbi_hard(code, frame)?);
    }
    Ok(AttackOutput {
        payload,
        coded_decisions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::{generate_pilot_block, FrameRole};
    use crate::numerics::{SeededRng, C64};

    /// Eve sees user 0's symbol through a fixed `m`-antenna gain plus noise.
    fn synthetic(rng: &mut SeededRng, frames: &[Frame], m: usize, noise: f64) -> CMatrix {
        let gains: Vec<C64> = (0..m).map(|i| C64::new(1.0 + i as f64, 0.5 - i as f64)).collect();
        let syms: Vec<C64> = frames.iter().flat_map(|f| f.symbols.iter().copied()).collect();
        CMatrix::from_fn(syms.len(), m, |r, c| {
            syms[r] * gains[c] + C64::new(rng.standard_normal(), rng.standard_normal()) * noise
        })
    }

    fn frames(rng: &mut SeededRng, code: &ConvCode, n: usize) -> Vec<Frame> {
        (0..n).map(|_| Frame::random(rng, code, FrameRole::Data, 0).unwrap()).collect()
    }

    #[test]
    fn training_set_shapes_and_labels() {
        let code = ConvCode::rate_third();
        let pilots = generate_pilot_block(&SeededRng::new(1, 0), 1, 150, &code).unwrap();
        let mut rng = SeededRng::new(2, 0);
        for (m, dim) in [(9, 18), (1, 2)] {
            let y = synthetic(&mut rng, &pilots[0], m, 0.1);
            let d = build_training_set(&y, &pilots[0]).unwrap();
            assert_eq!((d.len(), d.dim), (150, dim));
            assert_eq!(d.features.len(), 150 * dim);
            for (bits, &c) in d.labels_bits.iter().zip(&d.labels_class) {
                assert_eq!(index_to_bits(c), *bits);
            }
        }
        assert_eq!(bits_to_index(1, 0), 2);
        let short = CMatrix::zeros(149, 2);
        assert!(matches!(build_training_set(&short, &pilots[0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn llr_examples_and_bounds() {
        assert_eq!(llr_from_proba(0.5), 0.0);
        assert!((llr_from_proba(0.9) + 2.1972245773362196).abs() < 1e-12);
        assert!((llr_from_proba(0.1) - 2.1972245773362196).abs() < 1e-12);
        let cap = ((1.0 - PROB_CLIP) / PROB_CLIP).ln();
        assert!((cap - 20.7232658).abs() < 1e-6);
        for q in [0.0, 1e-12, 0.3, 0.7, 1.0] {
            let l = llr_from_proba(q);
            assert!(l.is_finite() && l.abs() <= cap + 1e-6);
            assert_eq!(l.signum(), (0.5 - q).signum());
        }
    }

    #[test]
    fn separable_channel_decodes_exactly() {
        let code = ConvCode::rate_third();
        let mut rng = SeededRng::new(3, 0);
        let train = frames(&mut rng, &code, 1);
        let test = frames(&mut rng, &code, 3);
        let yp = synthetic(&mut rng, &train, 4, 0.0);
        let yd = synthetic(&mut rng, &test, 4, 0.0);
        let d = build_training_set(&yp, &train).unwrap();
        let truth: Vec<u8> = test.iter().flat_map(|f| f.info_bits.iter().copied()).collect();
        for s in [Strategy::BinaryRelevance, Strategy::ClassifierChain] {
            let att = fit_attacker(&d, s).unwrap();
            assert_eq!(att.classifiers.len(), 2);
            assert_eq!(attack_soft(&att, &yd, &code).unwrap().payload, truth);
        }
        let att = fit_attacker(&d, Strategy::MultiClass).unwrap();
        assert_eq!(att.classifiers.len(), 4);
        let out = attack_hard(&att, &yd, &code).unwrap();
        assert_eq!(out.payload, truth);
        assert!(attack_soft(&att, &yd, &code).is_err());
    }

    #[test]
    fn multiclass_matches_bitwise_on_separable_clusters() {
        let code = ConvCode::rate_third();
        let mut rng = SeededRng::new(4, 0);
        let train = frames(&mut rng, &code, 2);
        let y = synthetic(&mut rng, &train, 2, 0.05);
        let d = build_training_set(&y, &train).unwrap();
        let mcc = fit_attacker(&d, Strategy::MultiClass).unwrap();
        let br = fit_attacker(&d, Strategy::BinaryRelevance).unwrap();
        for i in 0..d.len() {
            let c = mcc.predict_class(d.row(i)).unwrap();
            assert_eq!(c, d.labels_class[i]);
            assert_eq!(br.predict_bits(d.row(i)).unwrap(), index_to_bits(c));
        }
    }

    #[test]
    fn br_and_cc_agree_on_independent_bits() {
        let code = ConvCode::rate_third();
        let mut rng = SeededRng::new(5, 0);
        let train = frames(&mut rng, &code, 4);
        let test = frames(&mut rng, &code, 8);
        let d = build_training_set(&synthetic(&mut rng, &train, 1, 1.0), &train).unwrap();
        let t = build_training_set(&synthetic(&mut rng, &test, 1, 1.0), &test).unwrap();
        let acc = |s| {
            let att = fit_attacker(&d, s).unwrap();
            let hits: usize = (0..t.len())
                .map(|i| {
                    let p = att.predict_bits(t.row(i)).unwrap();
                    (p[0] == t.labels_bits[i][0]) as usize + (p[1] == t.labels_bits[i][1]) as usize
                })
                .sum();
            hits as f64 / (2 * t.len()) as f64
        };
        let (a, b) = (acc(Strategy::BinaryRelevance), acc(Strategy::ClassifierChain));
        // 2400 bits: 3 standard errors of a proportion near 0.8 is about 0.025
        assert!((a - b).abs() < 0.025, "{a} vs {b}");
        assert!(a > 0.6);
    }

    #[test]
    fn decorrelated_labels_stay_at_chance() {
        let code = ConvCode::rate_third();
        let mut rng = SeededRng::new(6, 0);
        let train = frames(&mut rng, &code, 1);
        let other = frames(&mut rng, &code, 1);
        // features come from unrelated symbols
        let d = build_training_set(&synthetic(&mut rng, &other, 3, 0.3), &train).unwrap();
        let test = frames(&mut rng, &code, 10);
        let decoy = frames(&mut rng, &code, 10);
        let yd = synthetic(&mut rng, &decoy, 3, 0.3);
        let att = fit_attacker(&d, Strategy::ClassifierChain).unwrap();
        let out = attack_soft(&att, &yd, &code).unwrap();
        let truth: Vec<u8> = test.iter().flat_map(|f| f.coded_bits.iter().copied()).collect();
        let n = truth.len() as f64;
        let acc = out.coded_decisions.iter().zip(&truth).filter(|(a, b)| a == b).count() as f64 / n;
        let se = (0.25 / n).sqrt();
        assert!((acc - 0.5).abs() < 3.0 * se, "{acc}");
    }

    #[test]
    fn fitting_is_deterministic_and_dumpable() {
        let code = ConvCode::rate_third();
        let mut rng = SeededRng::new(7, 0);
        let train = frames(&mut rng, &code, 1);
        let d = build_training_set(&synthetic(&mut rng, &train, 2, 0.5), &train).unwrap();
        let a = fit_attacker(&d, Strategy::ClassifierChain).unwrap();
        let b = fit_attacker(&d, Strategy::ClassifierChain).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.classifiers[1].dim(), 5);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }

    #[test]
    fn multinomial_attacker_decodes_separable_channel() {
        let code = ConvCode::rate_third();
        let mut rng = SeededRng::new(11, 0);
        let train = frames(&mut rng, &code, 1);
        let test = frames(&mut rng, &code, 2);
        let d = build_training_set(&synthetic(&mut rng, &train, 2, 0.05), &train).unwrap();
        let yd = synthetic(&mut rng, &test, 2, 0.05);
        let opts = FitOptions {
            multiclass: MultiClassMode::Multinomial,
            ..FitOptions::default()
        };
        let att = fit_attacker_with(&d, Strategy::MultiClass, opts).unwrap();
        assert!(att.classifiers.is_empty() && att.softmax.is_some());
        let truth: Vec<u8> = test.iter().flat_map(|f| f.info_bits.iter().copied()).collect();
        assert_eq!(attack_hard(&att, &yd, &code).unwrap().payload, truth);
        let q = att.bit_probabilities(d.row(0)).unwrap();
        assert_eq!([(q[0] > 0.5) as u8, (q[1] > 0.5) as u8], d.labels_bits[0]);
    }
}
