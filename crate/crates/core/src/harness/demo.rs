//! Noiseless constellation seen by one user and by a single-antenna Eve.
//!
//! User `k` is sent two pilot signals: symbol `00` repeated over the first
//! `N` slots, symbol `11` over the next `N`. Every other user gets a
//! pseudo-random QPSK sequence. ZF uses one normalization for the whole
//! block so that the user's points do not move with the other users' data.

use std::io::Write;

use crate::channel::{receive_eve, receive_users, sample_channel};
use crate::error::Result;
use crate::modem::SymbolAlphabet;
use crate::numerics::{CVector, SeededRng, C64};
use crate::precoder::{Precoder, PrecoderKind, ZfNormalization};

use super::config::ExperimentConfig;
use super::svg::{Svg, PALETTE};

/// Symbol indices of the two pilot signals of the target user.
pub const DEMO_SYMBOLS: [usize; 2] = [0, 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observer {
    User,
    Eve,
}

impl Observer {
    pub fn name(&self) -> &'static str {
        match self {
            Observer::User => "user",
            Observer::Eve => "eve",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoPoint {
    pub scheme: PrecoderKind,
    pub observer: Observer,
    pub slot: usize,
    /// Symbol index sent to the target user.
    pub symbol: usize,
    pub value: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub points: Vec<DemoPoint>,
    /// CI threshold `σ_z √γ` of the target user.
    pub tau: f64,
}

/// ZF and CISPM pilots of one channel realization, seen noiselessly by the
/// target user and Eve's first antenna. Uses `n_t`, `k`, `target_user`,
/// `pilot_symbols`, `gamma_db`, `eta_db`, noise variances and `seed`.
pub fn demo_constellation(cfg: &ExperimentConfig) -> Result<Constellation> {
    let cfg = ExperimentConfig { m: 1, ..cfg.clone() };
    cfg.validate()?;
    let base = SeededRng::new(cfg.seed, 0);
    let ch = sample_channel(&mut base.substream(0), cfg.k, cfg.n_t, 1, cfg.sigma_z2, cfg.sigma_e2)?;
    let alphabet = SymbolAlphabet::qpsk();
    let mut sym_rng = base.substream(1);
    let n = cfg.pilot_symbols;
    let symbols: Vec<usize> = (0..2 * n).map(|t| DEMO_SYMBOLS[t / n]).collect();
    let slots: Vec<CVector> = symbols
        .iter()
        .map(|&s| {
            (0..cfg.k)
                .map(|u| {
                    if u == cfg.target_user {
                        alphabet.point(s)
                    } else {
                        alphabet.point(sym_rng.below(4))
                    }
                })
                .collect()
        })
        .collect();
    let mut points = Vec::new();
    for scheme in [PrecoderKind::Zf, PrecoderKind::Cispm] {
        let mut spec = ExperimentConfig {
            precoder: scheme,
            ..cfg.clone()
        }
        .precoder_spec();
        spec.zf_normalization = ZfNormalization::PerBlock;
        let pre = Precoder::new(&spec, &ch)?;
        let xs = pre.precode_block(&slots, &mut base.substream(2))?;
        for (slot, (x, &symbol)) in xs.iter().zip(&symbols).enumerate() {
            let yu = receive_users(&ch, &x.x, None)?[cfg.target_user];
            let ye = receive_eve(&ch, &x.x, None)?[0];
            for (observer, value) in [(Observer::User, yu), (Observer::Eve, ye)] {
                points.push(DemoPoint {
                    scheme,
                    observer,
                    slot,
                    symbol,
                    value,
                });
            }
        }
    }
    Ok(Constellation {
        points,
        tau: cfg.sigma_z2.sqrt() * cfg.gamma_linear().sqrt(),
    })
}

impl Constellation {
    pub fn select(&self, scheme: PrecoderKind, observer: Observer) -> impl Iterator<Item = &DemoPoint> {
        self.points
            .iter()
            .filter(move |p| p.scheme == scheme && p.observer == observer)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["precoder", "observer", "slot", "symbol", "re", "im"])?;
        for p in &self.points {
            out.write_record([
                p.scheme.name().to_string(),
                p.observer.name().to_string(),
                p.slot.to_string(),
                p.symbol.to_string(),
                format!("{}", p.value.re),
                format!("{}", p.value.im),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Four scatter panels: ZF and CISPM, user and Eve.
    pub fn to_svg(&self) -> String {
        let (pw, ph, gap) = (300.0, 300.0, 50.0);
        let mut svg = Svg::new(2.0 * pw + 3.0 * gap, 2.0 * ph + 3.0 * gap);
        let panels = [
            (PrecoderKind::Zf, Observer::User),
            (PrecoderKind::Zf, Observer::Eve),
            (PrecoderKind::Cispm, Observer::User),
            (PrecoderKind::Cispm, Observer::Eve),
        ];
        for (i, &(scheme, obs)) in panels.iter().enumerate() {
            let ox = gap + (i % 2) as f64 * (pw + gap);
            let oy = gap + (i / 2) as f64 * (ph + gap);
            let pts: Vec<&DemoPoint> = self.select(scheme, obs).collect();
            let r = pts
                .iter()
                .map(|p| p.value.re.abs().max(p.value.im.abs()))
                .fold(1e-9, f64::max)
                * 1.1;
            let sx = |v: f64| ox + (v + r) / (2.0 * r) * pw;
            let sy = |v: f64| oy + (1.0 - (v + r) / (2.0 * r)) * ph;
            svg.rect(ox, oy, pw, ph, "black");
            svg.line(sx(-r), sy(0.0), sx(r), sy(0.0), "#bbbbbb", 1.0);
            svg.line(sx(0.0), sy(-r), sx(0.0), sy(r), "#bbbbbb", 1.0);
            svg.text(ox + pw / 2.0, oy - 10.0, 13.0, "middle", &format!("{} at {}", scheme.name(), obs.name()));
            svg.text(ox + pw, oy + ph + 16.0, 10.0, "end", &format!("|axis| <= {r:.3}"));
            for p in pts {
                let color = PALETTE[if p.symbol == DEMO_SYMBOLS[0] { 0 } else { 1 }];
                svg.circle(sx(p.value.re), sy(p.value.im), 2.0, color);
            }
        }
        svg.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modem::ci_margins;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig {
            gamma_db: 5.0,
            eta_db: 5.0,
            seed: 4,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn zf_user_sees_two_points() {
        let c = demo_constellation(&cfg()).unwrap();
        let mut distinct: Vec<C64> = Vec::new();
        for p in c.select(PrecoderKind::Zf, Observer::User) {
            if !distinct.iter().any(|q| (q - p.value).norm() < 1e-9) {
                distinct.push(p.value);
            }
        }
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn cispm_user_points_meet_margins() {
        let c = demo_constellation(&cfg()).unwrap();
        let qpsk = SymbolAlphabet::qpsk();
        for p in c.select(PrecoderKind::Cispm, Observer::User) {
            let (a, b) = ci_margins(qpsk.point(p.symbol), p.value, c.tau).unwrap();
            assert!(a >= -1e-6 && b >= -1e-6, "{a} {b}");
        }
    }

    #[test]
    fn cispm_eve_cloud_fills_all_quadrants() {
        let c = demo_constellation(&cfg()).unwrap();
        let mut hist = [0usize; 4];
        let mut n = 0;
        for p in c.select(PrecoderKind::Cispm, Observer::Eve).take(150) {
            hist[(p.value.re < 0.0) as usize * 2 + (p.value.im < 0.0) as usize] += 1;
            n += 1;
        }
        // the target user's symbol is fixed over these slots, yet Eve's
        // point lands in every quadrant
        assert_eq!(n, 150);
        assert!(hist.iter().all(|&h| h >= 15), "{hist:?}");
    }
}
