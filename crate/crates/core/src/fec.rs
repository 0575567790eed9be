//! Zero-terminated convolutional code with hard- and soft-decision Viterbi
//! decoding.
//!
//! Generators are given in the usual octal notation where the most
//! significant tap multiplies the current input bit.

use crate::error::{check_len, Error, Result};

/// Constraint length used by both supported rates.
pub const CONSTRAINT_LENGTH: usize = 7;
/// QPSK symbols per coded frame.
pub const FRAME_SYMBOLS: usize = 150;
/// Trace-back depth for the optional windowed decoder.
pub const WINDOW_DEPTH: usize = 96;

/// Rate-1/3 generators (octal).
pub const RATE_THIRD_OCTAL: [u32; 3] = [0o133, 0o171, 0o165];
/// Rate-1/4 generators (octal).
pub const RATE_QUARTER_OCTAL: [u32; 4] = [0o133, 0o171, 0o165, 0o117];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCode {
    generators: Vec<u32>,
    constraint_length: usize,
    payload_bits: usize,
    /// Windowed trace-back depth; `None` means full-frame trace-back.
    window: Option<usize>,
}

impl ConvCode {
    pub fn new(generators: Vec<u32>, constraint_length: usize, payload_bits: usize) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Config("at least one generator required".into()));
        }
        if !(2..=16).contains(&constraint_length) {
            return Err(Error::Config(format!("unsupported constraint length {constraint_length}")));
        }
        if let Some(g) = generators.iter().find(|&&g| g == 0 || g >> constraint_length != 0) {
            return Err(Error::Config(format!(
                "generator {g:o} does not fit constraint length {constraint_length}"
            )));
        }
        Ok(ConvCode {
            generators,
            constraint_length,
            payload_bits,
            window: None,
        })
    }

    /// Rate 1/3, K = 7, 94 payload + 6 tail bits = 300 coded bits = 150 QPSK symbols.
    pub fn rate_third() -> Self {
        Self::for_frame(RATE_THIRD_OCTAL.to_vec())
    }

    /// Rate 1/4, K = 7, 69 payload + 6 tail bits = 300 coded bits = 150 QPSK symbols.
    pub fn rate_quarter() -> Self {
        Self::for_frame(RATE_QUARTER_OCTAL.to_vec())
    }

    /// Code for `1/rate_inverse` (3 or 4) sized to one 150-symbol frame.
    pub fn for_rate(rate_inverse: usize) -> Result<Self> {
        match rate_inverse {
            3 => Ok(Self::rate_third()),
            4 => Ok(Self::rate_quarter()),
            r => Err(Error::Config(format!("unsupported code rate 1/{r}"))),
        }
    }

    fn for_frame(generators: Vec<u32>) -> Self {
        let coded = 2 * FRAME_SYMBOLS;
        let steps = coded / generators.len();
        let tail = CONSTRAINT_LENGTH - 1;
        ConvCode {
            generators,
            constraint_length: CONSTRAINT_LENGTH,
            payload_bits: steps - tail,
            window: None,
        }
    }

    /// Same code with a different payload length (the tail stays fixed).
    pub fn with_payload(mut self, payload_bits: usize) -> Self {
        self.payload_bits = payload_bits;
        self
    }

    /// Switch to sliding-window trace-back of the given depth.
    pub fn with_window(mut self, depth: Option<usize>) -> Self {
        self.window = depth;
        self
    }

    pub fn generators(&self) -> &[u32] {
        &self.generators
    }

    pub fn generators_octal(&self) -> String {
        self.generators
            .iter()
            .map(|g| format!("{g:o}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn rate_inverse(&self) -> usize {
        self.generators.len()
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    pub fn tail_bits(&self) -> usize {
        self.constraint_length - 1
    }

    pub fn coded_bits(&self) -> usize {
        (self.payload_bits + self.tail_bits()) * self.rate_inverse()
    }

    fn states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    /// Output bits of the branch leaving `state` on input `bit`, packed LSB-first.
    fn branch_output(&self, state: usize, bit: u8) -> u32 {
        let reg = ((bit as u32) << (self.constraint_length - 1)) | state as u32;
        self.generators
            .iter()
            .enumerate()
            .fold(0, |acc, (j, g)| acc | (((g & reg).count_ones() & 1) << j))
    }

    fn next_state(&self, state: usize, bit: u8) -> usize {
        (((bit as usize) << (self.constraint_length - 1)) | state) >> 1
    }
}

/// Per-coded-bit log-likelihood ratios; positive favours bit 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LlrFrame(pub Vec<f64>);

/// Encode one payload, starting from the zero state and appending the zero tail.
pub fn conv_encode(code: &ConvCode, info_bits: &[u8]) -> Result<Vec<u8>> {
    if info_bits.len() != code.payload_bits() {
        return Err(Error::Framing(format!(
            "payload must be {} bits, got {}",
            code.payload_bits(),
            info_bits.len()
        )));
    }
    let n = code.rate_inverse();
    let mut out = Vec::with_capacity(code.coded_bits());
    let mut state = 0usize;
    let tail = std::iter::repeat_n(0u8, code.tail_bits());
    for bit in info_bits.iter().copied().chain(tail) {
        let o = code.branch_output(state, bit & 1);
        out.extend((0..n).map(|j| ((o >> j) & 1) as u8));
        state = code.next_state(state, bit & 1);
    }
    Ok(out)
}

/// Generic add-compare-select over the trellis. `branch_score(t, output)`
/// is maximised; returns the payload of the best zero-terminated path.
fn viterbi<F>(code: &ConvCode, mut branch_score: F) -> Vec<u8>
where
    F: FnMut(usize, u32) -> f64,
{
    let s_count = code.states();
    let steps = code.payload_bits() + code.tail_bits();
    let n_out = 1usize << code.rate_inverse();

    // Predecessors of each state: state s is reached from (2s mod S) + {0,1}
    // with input bit = MSB of s.
    let mut metric = vec![f64::NEG_INFINITY; s_count];
    metric[0] = 0.0;
    let mut next = vec![f64::NEG_INFINITY; s_count];
    let mut decisions = vec![0u8; steps * s_count];
    let mut scores = vec![0.0f64; n_out];
    let mut out_bits = Vec::with_capacity(code.payload_bits());
    let top = code.constraint_length - 2;

    for t in 0..steps {
        for (o, s) in scores.iter_mut().enumerate() {
            *s = branch_score(t, o as u32);
        }
        let in_tail = t >= code.payload_bits();
        for ns in 0..s_count {
            let bit = (ns >> top) as u8 & 1;
            if in_tail && bit == 1 {
                next[ns] = f64::NEG_INFINITY;
                continue;
            }
            let base = (ns << 1) & (s_count - 1);
            let (p0, p1) = (base, base | 1);
            let m0 = metric[p0] + scores[code.branch_output(p0, bit) as usize];
            let m1 = metric[p1] + scores[code.branch_output(p1, bit) as usize];
            // ties resolved towards the even predecessor
            if m1 > m0 {
                next[ns] = m1;
                decisions[t * s_count + ns] = 1;
            } else {
                next[ns] = m0;
                decisions[t * s_count + ns] = 0;
            }
        }
        std::mem::swap(&mut metric, &mut next);

        if let Some(depth) = code.window {
            if t + 1 > depth && t + 1 - depth <= code.payload_bits() && t < steps - 1 {
                // decide the bit at time t - depth from the currently best state
                let best = (0..s_count)
                    .fold(0, |b, s| if metric[s] > metric[b] { s } else { b });
                let target = t + 1 - depth - 1;
                let bit = trace(&decisions, s_count, top, best, t, target);
                if out_bits.len() == target {
                    out_bits.push(bit);
                }
            }
        }
    }

    // flush from the terminating zero state
    let mut full = vec![0u8; steps];
    let mut s = 0usize;
    for t in (0..steps).rev() {
        full[t] = (s >> top) as u8 & 1;
        let d = decisions[t * s_count + s] as usize;
        s = ((s << 1) & (s_count - 1)) | d;
    }
    let decided = out_bits.len();
    out_bits.extend_from_slice(&full[decided..code.payload_bits()]);
    out_bits
}

fn trace(decisions: &[u8], s_count: usize, top: usize, from: usize, t_end: usize, target: usize) -> u8 {
    let mut s = from;
    let mut t = t_end;
    loop {
        if t == target {
            return (s >> top) as u8 & 1;
        }
        let d = decisions[t * s_count + s] as usize;
        s = ((s << 1) & (s_count - 1)) | d;
        t -= 1;
    }
}

/// Maximum-likelihood decoding under the Hamming metric.
pub fn viterbi_hard(code: &ConvCode, coded_bits: &[u8]) -> Result<Vec<u8>> {
    check_len(code.coded_bits(), coded_bits.len())?;
    let n = code.rate_inverse();
    Ok(viterbi(code, |t, o| {
        let rx = &coded_bits[t * n..(t + 1) * n];
        let dist = rx
            .iter()
            .enumerate()
            .filter(|&(j, &b)| (b & 1) as u32 != (o >> j) & 1)
            .count();
        -(dist as f64)
    }))
}

/// Maximum-likelihood decoding under the correlation metric `Σ ±llr`.
pub fn viterbi_soft(code: &ConvCode, llrs: &LlrFrame) -> Result<Vec<u8>> {
    check_len(code.coded_bits(), llrs.0.len())?;
    if llrs.0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("LLRs must be finite".into()));
    }
    let n = code.rate_inverse();
    Ok(viterbi(code, |t, o| soft_branch(&llrs.0[t * n..(t + 1) * n], o)))
}

fn soft_branch(llr: &[f64], o: u32) -> f64 {
    llr.iter()
        .enumerate()
        .map(|(j, &l)| if (o >> j) & 1 == 0 { l } else { -l })
        .sum()
}

/// Correlation metric of a codeword against LLRs.
pub fn soft_path_metric(codeword: &[u8], llrs: &LlrFrame) -> f64 {
    codeword
        .iter()
        .zip(&llrs.0)
        .map(|(&c, &l)| if c == 0 { l } else { -l })
        .sum()
}
