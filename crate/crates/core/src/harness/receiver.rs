//! Conventional receiver of an intended user: QPSK demapping followed by
//! Viterbi decoding. Knows nothing of the eavesdropper.

use crate::error::{Error, Result};
use crate::fec::{viterbi_hard, viterbi_soft, ConvCode, LlrFrame};
use crate::modem::demodulate_hard;
use crate::numerics::C64;

use super::config::UserDecoder;

/// Per-bit LLRs `2·√γ·component/σ`, bit 0 from the real part and bit 1
/// from the imaginary part. The CI constraint places the noiseless point
/// at least `σ√γ` from each decision boundary, so this is the Gaussian
/// LLR at the margin; any common scale leaves the Viterbi path unchanged.
pub fn user_llrs(y: &[C64], gamma: f64, sigma: f64) -> Vec<f64> {
    let s = 2.0 * gamma.sqrt() / sigma;
    y.iter().flat_map(|v| [s * v.re, s * v.im]).collect()
}

/// Decode consecutive frames received by one user.
pub fn decode_user(
    y: &[C64],
    code: &ConvCode,
    mode: UserDecoder,
    gamma: f64,
    sigma: f64,
) -> Result<Vec<Vec<u8>>> {
    let per = code.coded_bits() / 2;
    if per == 0 || y.len() % per != 0 {
        return Err(Error::Framing(format!("{} symbols is not a whole number of {per}-symbol frames", y.len())));
    }
    y.chunks_exact(per)
        .map(|frame| match mode {
            UserDecoder::Hard => viterbi_hard(code, &demodulate_hard(frame)),
            UserDecoder::Soft => viterbi_soft(code, &LlrFrame(user_llrs(frame, gamma, sigma))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fec::conv_encode;
    use crate::modem::modulate;
    use crate::numerics::SeededRng;

    #[test]
    fn llr_sign_follows_gray_map() {
        let l = user_llrs(&[C64::new(0.5, -0.5)], 1.0, 1.0);
        assert!(l[0] > 0.0 && l[1] < 0.0);
        assert!((l[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn both_paths_recover_noisy_frames() {
        let code = ConvCode::rate_third();
        let mut rng = SeededRng::new(3, 0);
        let bits = rng.bits(code.payload_bits() * 2);
        let mut y = Vec::new();
        for chunk in bits.chunks(code.payload_bits()) {
            y.extend(modulate(&conv_encode(&code, chunk).unwrap()).unwrap().into_inner());
        }
        for v in y.iter_mut() {
            *v = *v * 2.0 + C64::new(0.4 * rng.standard_normal(), 0.4 * rng.standard_normal());
        }
        for mode in [UserDecoder::Hard, UserDecoder::Soft] {
            let out = decode_user(&y, &code, mode, 2.0, 1.0).unwrap();
            assert_eq!(out.concat(), bits);
        }
        assert!(decode_user(&y[..10], &code, UserDecoder::Soft, 1.0, 1.0).is_err());
    }
}
