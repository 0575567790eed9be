//! Line plots of sweep results.

use crate::error::{Error, Result};

use super::metrics::MetricsRecord;
use super::svg::{Svg, PALETTE};

/// Smallest value drawn on a logarithmic axis; zeros are pinned here.
pub const LOG_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    Antennas,
    GammaDb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    BerEve,
    FerEve,
    BerUser,
    FerUser,
    Accuracy,
    PowerDb,
}

impl Metric {
    pub fn label(&self) -> &'static str {
        match self {
            Metric::BerEve => "BER at Eve",
            Metric::FerEve => "FER at Eve",
            Metric::BerUser => "BER at user",
            Metric::FerUser => "FER at user",
            Metric::Accuracy => "Eve accuracy before decoding",
            Metric::PowerDb => "Total transmit power [dBW]",
        }
    }

    pub fn log_scale(&self) -> bool {
        matches!(self, Metric::BerEve | Metric::FerEve | Metric::BerUser | Metric::FerUser)
    }

    pub fn value(&self, r: &MetricsRecord) -> f64 {
        match self {
            Metric::BerEve => r.ber_eve,
            Metric::FerEve => r.fer_eve,
            Metric::BerUser => r.ber_user,
            Metric::FerUser => r.fer_user,
            Metric::Accuracy => r.accuracy,
            Metric::PowerDb => r.p_tot_db,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxesSpec {
    pub x: XAxis,
    pub y: Metric,
    pub title: String,
}

impl XAxis {
    fn label(&self) -> &'static str {
        match self {
            XAxis::Antennas => "Number of Eve antennas M",
            XAxis::GammaDb => "eta = gamma_k [dB]",
        }
    }

    fn value(&self, r: &MetricsRecord) -> f64 {
        match self {
            XAxis::Antennas => r.m as f64,
            XAxis::GammaDb => r.gamma_db,
        }
    }
}

fn fmt_tick(v: f64) -> String {
    if v == v.round() {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

/// Render one metric against the sweep axis, one line per
/// precoder × decoder pair in order of first appearance.
pub fn render_plot(records: &[MetricsRecord], axes: &AxesSpec) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Input("nothing to plot".into()));
    }
    let log = axes.y.log_scale();
    let mut series: Vec<(String, usize, Vec<(f64, f64, bool)>)> = Vec::new();
    for r in records {
        let name = format!("{} {}", r.precoder.name(), r.decoder.name());
        let raw = axes.y.value(r);
        if !raw.is_finite() {
            continue;
        }
        let clamped = log && raw < LOG_FLOOR;
        let y = if clamped { LOG_FLOOR } else { raw };
        let pt = (axes.x.value(r), y, clamped);
        match series.iter_mut().find(|s| s.0 == name) {
            Some(s) => s.2.push(pt),
            None => series.push((name, r.decoder as usize, vec![pt])),
        }
    }
    for s in series.iter_mut() {
        s.2.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let all: Vec<(f64, f64, bool)> = series.iter().flat_map(|s| s.2.iter().copied()).collect();
    let mut xs: Vec<f64> = all.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();

    let (mut x0, mut x1) = match (xs.first(), xs.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => (0.0, 1.0),
    };
    if x1 - x0 < 1e-12 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let ys = all.iter().map(|p| p.1);
    let (ymin, ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (y0, y1) = if !ymin.is_finite() {
        if log {
            (-5.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    } else if log {
        let lo = ymin.log10().floor();
        let hi = ymax.log10().ceil().max(lo + 1.0);
        (lo, hi)
    } else {
        let pad = ((ymax - ymin) * 0.1).max(0.05 * ymax.abs().max(1e-3));
        (ymin - pad, ymax + pad)
    };

    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| {
        let v = if log { y.log10() } else { y };
        TOP + (1.0 - (v - y0) / (y1 - y0)) * ph
    };

    let mut svg = Svg::new(W, H);
    svg.text(LEFT + pw / 2.0, 24.0, 15.0, "middle", &axes.title);
    svg.rect(LEFT, TOP, pw, ph, "black");
    for &x in &xs {
        let px = sx(x);
        svg.line(px, TOP + ph, px, TOP + ph + 5.0, "black", 1.0);
        svg.text(px, TOP + ph + 18.0, 11.0, "middle", &fmt_tick(x));
    }
    if log {
        let mut e = y0;
        while e <= y1 + 1e-9 {
            let py = sy(10f64.powf(e));
            svg.line(LEFT, py, LEFT + pw, py, "#dddddd", 1.0);
            svg.text(LEFT - 6.0, py + 4.0, 11.0, "end", &format!("1e{}", e as i64));
            e += 1.0;
        }
    } else {
        for i in 0..=4 {
            let v = y0 + (y1 - y0) * i as f64 / 4.0;
            let py = sy(v);
            svg.line(LEFT, py, LEFT + pw, py, "#dddddd", 1.0);
            svg.text(LEFT - 6.0, py + 4.0, 11.0, "end", &format!("{v:.3}"));
        }
    }
    svg.text(LEFT + pw / 2.0, H - 14.0, 12.0, "middle", axes.x.label());
    svg.vtext(18.0, TOP + ph / 2.0, 12.0, axes.y.label());

    let mut any_clamped = false;
    for (i, (name, shape, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let screen: Vec<(f64, f64)> = pts.iter().map(|p| (sx(p.0), sy(p.1))).collect();
        svg.polyline(&screen, color);
        for (p, &(px, py)) in pts.iter().zip(&screen) {
            if p.2 {
                any_clamped = true;
                svg.floor_marker(px, py, color);
            } else {
                svg.marker(*shape, px, py, color, false);
            }
        }
        let ly = TOP + 12.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        svg.line(lx, ly, lx + 24.0, ly, color, 1.5);
        svg.marker(*shape, lx + 12.0, ly, color, false);
        svg.text(lx + 32.0, ly + 4.0, 11.0, "start", name);
    }
    if any_clamped {
        let ly = TOP + 12.0 + 20.0 * series.len() as f64 + 6.0;
        let lx = LEFT + pw + 15.0;
        svg.floor_marker(lx + 12.0, ly, "black");
        svg.text(lx + 32.0, ly + 4.0, 11.0, "start", "zero, drawn at 1e-5");
    }
    Ok(svg.finish())
}
