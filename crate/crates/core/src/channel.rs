//! Block-fading channels to the users and to the eavesdropper.

use std::io::{Read, Write};

use crate::error::{check_len, Error, Result};
use crate::numerics::{sample_cn, CMatrix, CVector, SeededRng, C64};

/// One coherence block's worth of channel state.
///
/// `h` is `K × N_t` (one row per user), `h_e` is `M × N_t` (one row per
/// eavesdropper antenna). Both stay fixed for every slot of the block.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CMatrix,
    pub h_e: CMatrix,
    pub sigma_z2: f64,
    pub sigma_e2: f64,
}

impl ChannelRealization {
    pub fn new(h: CMatrix, h_e: CMatrix, sigma_z2: f64, sigma_e2: f64) -> Result<Self> {
        if h.rows() > h.cols() {
            return Err(Error::Config(format!(
                "K = {} users exceeds N_t = {} antennas",
                h.rows(),
                h.cols()
            )));
        }
        check_len(h.cols(), h_e.cols())?;
        if !(sigma_z2 > 0.0 && sigma_e2 > 0.0) {
            return Err(Error::Config("noise variances must be positive".into()));
        }
        Ok(ChannelRealization {
            h,
            h_e,
            sigma_z2,
            sigma_e2,
        })
    }

    pub fn users(&self) -> usize {
        self.h.rows()
    }

    pub fn antennas(&self) -> usize {
        self.h.cols()
    }

    pub fn eve_antennas(&self) -> usize {
        self.h_e.rows()
    }

    pub fn sigma_z(&self) -> f64 {
        self.sigma_z2.sqrt()
    }

    /// Write as CSV: one row per matrix row with interleaved re/im entries,
    /// plus a trailing `noise` row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
        for (tag, m) in [("H", &self.h), ("He", &self.h_e)] {
            for r in 0..m.rows() {
                let mut rec = vec![tag.to_string(), r.to_string()];
                for z in m.row(r) {
                    rec.push(format!("{:e}", z.re));
                    rec.push(format!("{:e}", z.im));
                }
                out.write_record(&rec)?;
            }
        }
        out.write_record([
            "noise".to_string(),
            format!("{:e}", self.sigma_z2),
            format!("{:e}", self.sigma_e2),
        ])?;
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(r);
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Input(format!("bad number {s:?}: {e}")))
        };
        let mut h_rows: Vec<Vec<C64>> = Vec::new();
        let mut he_rows: Vec<Vec<C64>> = Vec::new();
        let mut noise = None;
        for rec in rdr.records() {
            let rec = rec?;
            match rec.get(0) {
                Some(tag @ ("H" | "He")) => {
                    let vals = rec
                        .iter()
                        .skip(2)
                        .map(parse)
                        .collect::<Result<Vec<f64>>>()?;
                    if vals.len() % 2 != 0 {
                        return Err(Error::Input("odd number of re/im entries".into()));
                    }
                    let row = vals.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
                    if tag == "H" {
                        h_rows.push(row);
                    } else {
                        he_rows.push(row);
                    }
                }
                Some("noise") => {
                    let a = parse(rec.get(1).unwrap_or(""))?;
                    let b = parse(rec.get(2).unwrap_or(""))?;
                    noise = Some((a, b));
                }
                other => return Err(Error::Input(format!("unknown channel record {other:?}"))),
            }
        }
        let (sz2, se2) = noise.ok_or_else(|| Error::Input("missing noise record".into()))?;
        let cols = h_rows.first().map_or(0, Vec::len);
        let to_matrix = |rows: Vec<Vec<C64>>| -> Result<CMatrix> {
            let n = rows.len();
            let data: Vec<C64> = rows.into_iter().flatten().collect();
            CMatrix::new(n, cols, data)
        };
        ChannelRealization::new(to_matrix(h_rows)?, to_matrix(he_rows)?, sz2, se2)
    }
}

/// Draw i.i.d. unit-variance Rayleigh channels for `k` users and an
/// `m`-antenna eavesdropper.
pub fn sample_channel(
    rng: &mut SeededRng,
    k: usize,
    n_t: usize,
    m: usize,
    sigma_z2: f64,
    sigma_e2: f64,
) -> Result<ChannelRealization> {
    if k == 0 || k > n_t {
        return Err(Error::Config(format!("need 1 <= K <= N_t, got K={k}, N_t={n_t}")));
    }
    if m == 0 {
        return Err(Error::Config("eavesdropper needs at least one antenna".into()));
    }
    let h = CMatrix::new(k, n_t, sample_cn(rng, k * n_t, 1.0)?.into_inner())?;
    let h_e = CMatrix::new(m, n_t, sample_cn(rng, m * n_t, 1.0)?.into_inner())?;
    ChannelRealization::new(h, h_e, sigma_z2, sigma_e2)
}

fn receive(m: &CMatrix, noise_var: f64, x: &[C64], rng: Option<&mut SeededRng>) -> Result<CVector> {
    let mut y = m.mul_vec(x)?;
    if let Some(rng) = rng {
        let z = sample_cn(rng, y.len(), noise_var)?;
        for (yi, zi) in y.iter_mut().zip(z.iter()) {
            *yi += zi;
        }
    }
    Ok(y)
}

/// `H x + z` at the users. Passing `None` for the stream gives the noiseless
/// signal `H x`.
pub fn receive_users(
    ch: &ChannelRealization,
    x: &[C64],
    rng: Option<&mut SeededRng>,
) -> Result<CVector> {
    receive(&ch.h, ch.sigma_z2, x, rng)
}

/// `H_e x + z_e` at the eavesdropper's antennas.
pub fn receive_eve(
    ch: &ChannelRealization,
    x: &[C64],
    rng: Option<&mut SeededRng>,
) -> Result<CVector> {
    receive(&ch.h_e, ch.sigma_e2, x, rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn paper_dimensions() {
        let ch = sample_channel(&mut SeededRng::new(7, 0), 6, 15, 9, 1.0, 1.0).unwrap();
        assert_eq!((ch.h.rows(), ch.h.cols()), (6, 15));
        assert_eq!((ch.h_e.rows(), ch.h_e.cols()), (9, 15));
    }

    #[test]
    fn deterministic_realization() {
        let a = sample_channel(&mut SeededRng::new(7, 3), 2, 4, 3, 1.0, 1.0).unwrap();
        let b = sample_channel(&mut SeededRng::new(7, 3), 2, 4, 3, 1.0, 1.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_too_many_users() {
        let err = sample_channel(&mut SeededRng::new(1, 0), 4, 3, 1, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn scalar_entry_variance() {
        let root = SeededRng::new(99, 0);
        let vals: Vec<C64> = (0..200)
            .map(|i| {
                let ch = sample_channel(&mut root.substream(i), 1, 1, 1, 1.0, 1.0).unwrap();
                ch.h[(0, 0)]
            })
            .collect();
        let var = vals.iter().map(|z| z.norm_sqr()).sum::<f64>() / vals.len() as f64;
        assert!((var - 1.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn noiseless_selection_row() {
        let h = CMatrix::new(1, 2, vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let ch = ChannelRealization::new(h.clone(), h, 1.0, 1.0).unwrap();
        let y = receive_users(&ch, &[c(3.0, 1.0), c(5.0, 0.0)], None).unwrap();
        assert_eq!(y.0, vec![c(3.0, 1.0)]);
    }

    #[test]
    fn dimension_mismatch() {
        let ch = sample_channel(&mut SeededRng::new(1, 0), 2, 3, 1, 1.0, 1.0).unwrap();
        assert!(matches!(
            receive_users(&ch, &[c(1.0, 0.0)], None),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn pure_noise_variance() {
        let ch = sample_channel(&mut SeededRng::new(4, 0), 3, 4, 2, 2.0, 0.5).unwrap();
        let x = vec![c(0.0, 0.0); 4];
        let mut rng = SeededRng::new(4, 1);
        let mut acc = 0.0;
        let slots = 5000;
        for _ in 0..slots {
            let y = receive_users(&ch, &x, Some(&mut rng)).unwrap();
            acc += y.norm_sqr();
        }
        let var = acc / (slots * 3) as f64;
        assert!((var - 2.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn single_antenna_eve_matches_user_row_statistics() {
        let user = sample_channel(&mut SeededRng::new(8, 0), 1, 3, 1, 1.0, 1.0).unwrap();
        // Eve's only antenna sees the same row as user 1.
        let ch = ChannelRealization::new(user.h.clone(), user.h.clone(), 1.0, 1.0).unwrap();
        let x = [c(0.3, -0.2), c(1.0, 0.5), c(-0.7, 0.1)];
        let yu = receive_users(&ch, &x, Some(&mut SeededRng::new(1, 1))).unwrap();
        let ye = receive_eve(&ch, &x, Some(&mut SeededRng::new(1, 1))).unwrap();
        assert_eq!(yu, ye);
    }

    #[test]
    fn eve_pilot_mean_converges() {
        let ch = sample_channel(&mut SeededRng::new(12, 0), 2, 4, 3, 1.0, 1.0).unwrap();
        let x = [c(0.5, 0.5), c(-0.2, 0.1), c(0.0, 1.0), c(0.3, -0.4)];
        let clean = receive_eve(&ch, &x, None).unwrap();
        let mut rng = SeededRng::new(12, 5);
        let n = 10_000;
        let mut mean = CVector::zeros(3);
        for _ in 0..n {
            let y = receive_eve(&ch, &x, Some(&mut rng)).unwrap();
            for (m, v) in mean.iter_mut().zip(y.iter()) {
                *m += v / n as f64;
            }
        }
        // per-component std-error: sqrt(0.5 / n)
        let se = (0.5 / n as f64).sqrt();
        for (m, c0) in mean.iter().zip(clean.iter()) {
            assert!((m.re - c0.re).abs() < 3.0 * se * 1.5);
            assert!((m.im - c0.im).abs() < 3.0 * se * 1.5);
        }
    }

    #[test]
    fn noiseless_linearity() {
        let ch = sample_channel(&mut SeededRng::new(3, 0), 2, 3, 2, 1.0, 1.0).unwrap();
        let x1 = [c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0)];
        let x2 = [c(0.5, 0.5), c(1.0, -1.0), c(0.0, 0.3)];
        let (a, b) = (c(0.7, -0.2), c(-1.5, 0.4));
        let mix: Vec<C64> = x1.iter().zip(&x2).map(|(p, q)| a * p + b * q).collect();
        let lhs = receive_eve(&ch, &mix, None).unwrap();
        let r1 = receive_eve(&ch, &x1, None).unwrap();
        let r2 = receive_eve(&ch, &x2, None).unwrap();
        for i in 0..2 {
            assert!((lhs[i] - (a * r1[i] + b * r2[i])).norm() < 1e-12);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let ch = sample_channel(&mut SeededRng::new(31, 0), 2, 3, 2, 1.0, 0.5).unwrap();
        let mut buf = Vec::new();
        ch.write_csv(&mut buf).unwrap();
        let back = ChannelRealization::read_csv(buf.as_slice()).unwrap();
        assert!(back.h.max_abs_diff(&ch.h) == 0.0);
        assert!(back.h_e.max_abs_diff(&ch.h_e) == 0.0);
        assert_eq!(back.sigma_e2, 0.5);
    }
}
