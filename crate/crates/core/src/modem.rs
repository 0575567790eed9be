//! Gray-mapped QPSK, constructive-interference margins and frame assembly.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::fec::{conv_encode, ConvCode};
use crate::numerics::{CVector, SeededRng, C64};

/// Gray-labelled QPSK: first bit selects the sign of the real part, second
/// bit the sign of the imaginary part (0 → positive).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolAlphabet {
    points: [C64; 4],
}

impl Default for SymbolAlphabet {
    fn default() -> Self {
        Self::qpsk()
    }
}

impl SymbolAlphabet {
    pub fn qpsk() -> Self {
        let a = FRAC_1_SQRT_2;
        // index = 2*b0 + b1
        SymbolAlphabet {
            points: [C64::new(a, a), C64::new(a, -a), C64::new(-a, a), C64::new(-a, -a)],
        }
    }

    pub fn order(&self) -> usize {
        4
    }

    pub fn bits_per_symbol(&self) -> usize {
        2
    }

    pub fn point(&self, index: usize) -> C64 {
        self.points[index]
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Alphabet index of a point, if it is one.
    pub fn index_of(&self, d: C64) -> Option<usize> {
        self.points.iter().position(|p| (p - d).norm() < 1e-12)
    }
}

pub fn bits_to_index(b0: u8, b1: u8) -> usize {
    2 * (b0 & 1) as usize + (b1 & 1) as usize
}

pub fn index_to_bits(index: usize) -> [u8; 2] {
    [((index >> 1) & 1) as u8, (index & 1) as u8]
}

/// Map bit pairs onto unit-energy QPSK points.
pub fn modulate(bits: &[u8]) -> Result<CVector> {
    if bits.len() % 2 != 0 {
        return Err(Error::Framing(format!("odd number of bits ({})", bits.len())));
    }
    let alphabet = SymbolAlphabet::qpsk();
    Ok(bits
        .chunks_exact(2)
        .map(|p| alphabet.point(bits_to_index(p[0], p[1])))
        .collect())
}

/// Quadrant decision; a zero component decides bit 0.
pub fn hard_detect(v: C64) -> [u8; 2] {
    [(v.re < 0.0) as u8, (v.im < 0.0) as u8]
}

pub fn demodulate_hard(symbols: &[C64]) -> Vec<u8> {
    symbols.iter().flat_map(|&v| hard_detect(v)).collect()
}

/// Signed distances of `v` beyond the constructive-interference threshold
/// `tau` for symbol `d`, per component. Both non-negative iff `v` lies in
/// the CI region of `d`.
pub fn ci_margins(d: C64, v: C64, tau: f64) -> Result<(f64, f64)> {
    if SymbolAlphabet::qpsk().index_of(d).is_none() {
        return Err(Error::Domain(format!("{d} is not a QPSK point")));
    }
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("threshold must be >= 0, got {tau}")));
    }
    let m_re = d.re.signum() * v.re - tau * d.re.abs();
    let m_im = d.im.signum() * v.im - tau * d.im.abs();
    Ok((m_re, m_im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameRole {
    Pilot,
    Data,
}

/// One coded frame for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub info_bits: Vec<u8>,
    pub coded_bits: Vec<u8>,
    pub symbols: CVector,
    pub role: FrameRole,
    pub user: usize,
}

impl Frame {
    /// Encode and modulate `info_bits` for `user`.
    pub fn encode(code: &ConvCode, info_bits: Vec<u8>, role: FrameRole, user: usize) -> Result<Self> {
        let coded_bits = conv_encode(code, &info_bits)?;
        let symbols = modulate(&coded_bits)?;
        Ok(Frame {
            info_bits,
            coded_bits,
            symbols,
            role,
            user,
        })
    }

    /// Random payload drawn from `rng`.
    pub fn random(rng: &mut SeededRng, code: &ConvCode, role: FrameRole, user: usize) -> Result<Self> {
        let bits = rng.bits(code.payload_bits());
        Self::encode(code, bits, role, user)
    }
}

/// Pilot slots followed by data slots within one coherence block.
///
/// `pilots[k]` and `data[k]` hold user `k`'s frames; slot `n` of the block
/// carries symbol `n` of every user's concatenated stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceBlock {
    pub pilots: Vec<Vec<Frame>>,
    pub data: Vec<Vec<Frame>>,
}

impl CoherenceBlock {
    pub fn users(&self) -> usize {
        self.pilots.len()
    }

    pub fn pilot_slots(&self) -> usize {
        self.pilots.first().map_or(0, |f| f.iter().map(|fr| fr.symbols.len()).sum())
    }

    pub fn total_slots(&self) -> usize {
        self.pilot_slots() + self.data.first().map_or(0, |f| f.iter().map(|fr| fr.symbols.len()).sum())
    }

    /// Symbols of every user at `slot`, counting pilots first.
    pub fn slot_symbols(&self, slot: usize) -> CVector {
        let np = self.pilot_slots();
        let (frames, idx) = if slot < np {
            (&self.pilots, slot)
        } else {
            (&self.data, slot - np)
        };
        frames
            .iter()
            .map(|user_frames| {
                let len = user_frames[0].symbols.len();
                user_frames[idx / len].symbols[idx % len]
            })
            .collect()
    }
}

/// Pseudo-random coded pilot sequences for `k` users, `n` symbols each.
/// Each user draws from its own substream of `rng`, so any party holding
/// the seed regenerates the same pilots.
pub fn generate_pilot_block(rng: &SeededRng, k: usize, n: usize, code: &ConvCode) -> Result<Vec<Vec<Frame>>> {
    let per_frame = code.coded_bits() / 2;
    if code.coded_bits() % 2 != 0 || n == 0 || n % per_frame != 0 {
        return Err(Error::Framing(format!(
            "{n} pilot symbols is not a whole number of {per_frame}-symbol frames"
        )));
    }
    (0..k)
        .map(|user| {
            let mut r = rng.substream(user as u64);
            (0..n / per_frame)
                .map(|_| Frame::random(&mut r, code, FrameRole::Pilot, user))
                .collect()
        })
        .collect()
}
