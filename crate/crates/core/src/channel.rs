//! Band-limited impulse responses, power delay profiles and their statistics.

use std::io::Write;

use num_complex::Complex64;

use crate::ray::MultipathComponent;
use crate::{Error, Result};

/// Default band limit, Hz.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 2e9;
/// Default grid oversampling relative to `1 / bandwidth`.
pub const DEFAULT_OVERSAMPLE: u32 = 8;
/// Default noise gate below the PDP peak, dB.
pub const DEFAULT_GATE_DB: f64 = 30.0;
/// Grid margin after the last (and, where room allows, before the first)
/// component, in units of `1 / bandwidth`.
pub const GRID_MARGIN_SYMBOLS: f64 = 16.0;

/// `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Uniform delay grid `tau_k = k * spacing` for `k = start .. start + len`.
/// Anchoring at zero delay makes grids of different realizations line up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    pub start: i64,
    pub len: usize,
    pub spacing: f64,
}

impl DelayGrid {
    pub fn delay(&self, k: usize) -> f64 {
        (self.start + k as i64) as f64 * self.spacing
    }

    pub fn delays(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.delay(k))
    }

    fn end(&self) -> i64 {
        self.start + self.len as i64
    }

    fn compatible(&self, other: &DelayGrid) -> bool {
        (self.spacing - other.spacing).abs() <= 1e-15 * self.spacing.max(other.spacing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelImpulseResponse {
    pub grid: DelayGrid,
    pub taps: Vec<Complex64>,
    pub bandwidth_hz: f64,
    pub oversample: u32,
}

impl ChannelImpulseResponse {
    /// `sum |h_k|^2 * spacing * bandwidth`; equals the component power sum
    /// for an ideal band limit.
    pub fn band_limited_energy(&self) -> f64 {
        self.taps.iter().map(|h| h.norm_sqr()).sum::<f64>() * self.grid.spacing * self.bandwidth_hz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub grid: DelayGrid,
    /// Received power relative to the transmit power (0 dBm), linear.
    pub power: Vec<f64>,
    pub n_realizations: usize,
}

impl PowerDelayProfile {
    pub fn new(grid: DelayGrid, power: Vec<f64>) -> Result<Self> {
        if power.len() != grid.len {
            return Err(Error::GridMismatch(format!("{} samples on a {}-point grid", power.len(), grid.len)));
        }
        if power.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::range("power", "PDP samples must be finite and >= 0"));
        }
        Ok(Self { grid, power, n_realizations: 1 })
    }

    pub fn peak(&self) -> f64 {
        self.power.iter().copied().fold(0.0, f64::max)
    }

    /// Copy with every bin more than `threshold_db` below the peak set to zero.
    pub fn gated(&self, threshold_db: f64) -> Self {
        let floor = self.peak() * 10f64.powf(-threshold_db / 10.0);
        let power = self.power.iter().map(|&p| if p >= floor { p } else { 0.0 }).collect();
        Self { power, ..self.clone() }
    }
}

/// Sinc pulse shaping of the component list:
/// `h(tau_k) = sum_m a_m sinc(B (tau_k - tau_m))`.
///
/// The grid runs from `max(0, min(0.95 tau_min, tau_min - 16/B))` to
/// `tau_max + 16/B` with spacing `1 / (oversample B)`.
pub fn shape_cir(mpcs: &[MultipathComponent], bandwidth_hz: f64, oversample: u32) -> Result<ChannelImpulseResponse> {
    if mpcs.is_empty() {
        return Err(Error::Empty("multipath component list"));
    }
    if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
        return Err(Error::range("bandwidth_hz", "must be > 0"));
    }
    if oversample < 2 {
        return Err(Error::range("oversample", format!("must be >= 2, got {oversample}")));
    }
    let spacing = 1.0 / (oversample as f64 * bandwidth_hz);
    let margin = GRID_MARGIN_SYMBOLS / bandwidth_hz;
    let (tau_min, tau_max) = mpcs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m.delay), hi.max(m.delay)));
    let first = (0.95 * tau_min).min(tau_min - margin).max(0.0);
    let last = tau_max + margin;
    let start = (first / spacing).floor() as i64;
    let end = (last / spacing).ceil() as i64;
    let grid = DelayGrid { start, len: (end - start + 1) as usize, spacing };
    let taps = grid
        .delays()
        .map(|tau| mpcs.iter().map(|m| m.amplitude * sinc(bandwidth_hz * (tau - m.delay))).sum())
        .collect::<Vec<Complex64>>();
    if taps.iter().any(|h| !(h.re.is_finite() && h.im.is_finite())) {
        return Err(Error::NonFiniteAmplitude("band-limited CIR".into()));
    }
    Ok(ChannelImpulseResponse { grid, taps, bandwidth_hz, oversample })
}

/// `P(tau_k) = (1/R) sum_r |h_r(tau_k)|^2` over the union of the input grids.
/// Inputs must share the grid spacing; sums run in input order.
pub fn average_pdp(cirs: &[ChannelImpulseResponse]) -> Result<PowerDelayProfile> {
    let first = cirs.first().ok_or(Error::Empty("CIR list"))?;
    let mut start = first.grid.start;
    let mut end = first.grid.end();
    for c in cirs {
        if !c.grid.compatible(&first.grid) {
            return Err(Error::GridMismatch(format!(
                "grid spacing {:e} s vs {:e} s",
                c.grid.spacing, first.grid.spacing
            )));
        }
        start = start.min(c.grid.start);
        end = end.max(c.grid.end());
    }
    let grid = DelayGrid { start, len: (end - start) as usize, spacing: first.grid.spacing };
    let mut power = vec![0.0; grid.len];
    for c in cirs {
        let offset = (c.grid.start - start) as usize;
        for (k, h) in c.taps.iter().enumerate() {
            power[offset + k] += h.norm_sqr();
        }
    }
    let r = cirs.len() as f64;
    power.iter_mut().for_each(|p| *p /= r);
    Ok(PowerDelayProfile { grid, power, n_realizations: cirs.len() })
}

/// Second central moment of the gated PDP, s.
pub fn rms_delay_spread(pdp: &PowerDelayProfile, threshold_db: f64) -> Result<f64> {
    if pdp.power.is_empty() {
        return Err(Error::Empty("power delay profile"));
    }
    if !(threshold_db > 0.0) {
        return Err(Error::range("threshold_db", "must be > 0"));
    }
    let gated = pdp.gated(threshold_db);
    // delays measured from the grid start keep the sums well conditioned
    let rel = |k: usize| k as f64 * pdp.grid.spacing;
    spread_of((0..gated.power.len()).map(|k| (rel(k), gated.power[k])))
}

/// RMS delay spread of raw `(delay, power)` pairs, s.
pub fn spread_of(samples: impl Iterator<Item = (f64, f64)> + Clone) -> Result<f64> {
    let total: f64 = samples.clone().map(|(_, p)| p).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroPower);
    }
    let mean = samples.clone().map(|(t, p)| t * p).sum::<f64>() / total;
    let var = samples.map(|(t, p)| (t - mean).powi(2) * p).sum::<f64>() / total;
    Ok(var.max(0.0).sqrt())
}

/// Received signal strength and path loss for a 0 dBm transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub rss_dbm: f64,
    pub pl_db: f64,
}

impl PathLoss {
    fn from_power(total: f64) -> Result<Self> {
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::ZeroPower);
        }
        let rss_dbm = 10.0 * total.log10();
        Ok(Self { rss_dbm, pl_db: -rss_dbm })
    }
}

/// `RSS = 10 log10(sum |a_m|^2)` dBm and `PL = -RSS`.
pub fn path_loss(mpcs: &[MultipathComponent]) -> Result<PathLoss> {
    if mpcs.is_empty() {
        return Err(Error::Empty("multipath component list"));
    }
    PathLoss::from_power(mpcs.iter().map(MultipathComponent::power).sum())
}

/// Same quantity evaluated on the band-limited response.
pub fn path_loss_cir(cir: &ChannelImpulseResponse) -> Result<PathLoss> {
    if cir.taps.is_empty() {
        return Err(Error::Empty("CIR"));
    }
    PathLoss::from_power(cir.band_limited_energy())
}

/// Free-space path loss `20 log10(4 pi d f / c)`, dB.
pub fn free_space_path_loss_db(distance_m: f64, carrier_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * carrier_hz / crate::SPEED_OF_LIGHT).log10()
}

/// Right-continuous empirical CDF: one `(value, k/n)` point per distinct value.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Empty("CDF sample list"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::range("values", "CDF samples must be finite"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, v) in sorted.into_iter().enumerate() {
        let p = (k + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => out.push((v, p)),
        }
    }
    if let Some(last) = out.last_mut() {
        last.1 = 1.0;
    }
    Ok(out)
}

/// CDF samples: per-bin PDP power in dBm, keeping bins within `threshold_db`
/// of the peak.
pub fn pdp_cdf_samples(pdp: &PowerDelayProfile, threshold_db: f64) -> Vec<f64> {
    pdp.gated(threshold_db).power.iter().filter(|&&p| p > 0.0).map(|p| 10.0 * p.log10()).collect()
}

/// Nine significant digits.
pub fn fmt9(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn write_pdp_csv<W: Write>(pdp: &PowerDelayProfile, mut w: W) -> Result<()> {
    writeln!(w, "delay_ns,power_linear,power_dbm")?;
    for (tau, p) in pdp.grid.delays().zip(&pdp.power) {
        writeln!(w, "{},{},{}", fmt9(tau * 1e9), fmt9(*p), fmt9(10.0 * p.log10()))?;
    }
    Ok(())
}

pub fn write_cir_csv<W: Write>(cir: &ChannelImpulseResponse, mut w: W) -> Result<()> {
    writeln!(w, "delay_ns,tap_re,tap_im")?;
    for (tau, h) in cir.grid.delays().zip(&cir.taps) {
        writeln!(w, "{},{},{}", fmt9(tau * 1e9), fmt9(h.re), fmt9(h.im))?;
    }
    Ok(())
}

pub fn write_cdf_csv<W: Write>(cdf: &[(f64, f64)], mut w: W) -> Result<()> {
    writeln!(w, "value_dbm,probability")?;
    for (v, p) in cdf {
        writeln!(w, "{},{}", fmt9(*v), fmt9(*p))?;
    }
    Ok(())
}

pub fn write_mpcs_csv<W: Write>(mpcs: &[MultipathComponent], mut w: W) -> Result<()> {
    writeln!(w, "path_id,delay_s,amp_re,amp_im,n_interactions,kind")?;
    for (i, m) in mpcs.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{}",
            fmt9(m.delay),
            fmt9(m.amplitude.re),
            fmt9(m.amplitude.im),
            m.interaction_count,
            m.kind
        )?;
    }
    Ok(())
}
