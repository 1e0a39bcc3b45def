//! GN-model physical layer: ASE, XCI efficiency, SNR and the piecewise
//! linear efficiency fits used by the spacing LP.

use std::collections::BTreeMap;
use std::f64::consts::{LN_10, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::par::{self, Exec};
use crate::topology::{ChannelIndex, Route};

pub const PLANCK: f64 = 6.626_070_15e-34;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PhysicsError {
    #[error("channels overlap: spacing {delta_f_ghz} GHz, interferer bandwidth {bandwidth_ghz} GHz")]
    Overlap { delta_f_ghz: f64, bandwidth_ghz: f64 },
    #[error("nonpositive input to SNR: {0}")]
    NonPositive(&'static str),
    #[error("invalid fiber parameter `{0}`")]
    Parameter(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FiberParams {
    pub alpha_db_per_km: f64,
    /// |β₂| in ps²/km.
    pub beta2_ps2_per_km: f64,
    /// γ in 1/(W·km).
    pub gamma_per_w_km: f64,
    pub nsp_db: f64,
    pub span_km: f64,
    pub nu_hz: f64,
    pub h: f64,
    /// Adds the self-channel term to every NLI evaluation.
    pub include_sci: bool,
}

impl Default for FiberParams {
    fn default() -> Self {
        Self {
            alpha_db_per_km: 0.2,
            beta2_ps2_per_km: 21.7,
            gamma_per_w_km: 1.3,
            nsp_db: 5.0,
            span_km: 100.0,
            nu_hz: 192.5e12,
            h: PLANCK,
            include_sci: false,
        }
    }
}

impl FiberParams {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let p: FiberParams = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        let checks = [
            (self.alpha_db_per_km, "alpha_db_per_km"),
            (self.beta2_ps2_per_km, "beta2_ps2_per_km"),
            (self.gamma_per_w_km, "gamma_per_w_km"),
            (self.nsp_db, "nsp_db"),
            (self.span_km, "span_km"),
            (self.nu_hz, "nu_hz"),
            (self.h, "h"),
        ];
        for (v, name) in checks {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PhysicsError::Parameter(name));
            }
        }
        Ok(())
    }

    /// Power attenuation in 1/km.
    pub fn alpha_lin(&self) -> f64 {
        self.alpha_db_per_km * LN_10 / 10.0
    }

    /// |β₂| in s²/km.
    pub fn beta2_s2_per_km(&self) -> f64 {
        self.beta2_ps2_per_km * 1e-24
    }

    /// 3γ²/(2π·α·|β₂|) in Hz²/W².
    pub fn xci_prefactor(&self) -> f64 {
        3.0 * self.gamma_per_w_km.powi(2) / (2.0 * PI * self.alpha_lin() * self.beta2_s2_per_km())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdConfig {
    /// Launch PSD in W/GHz.
    pub g_w_per_ghz: f64,
}

impl PsdConfig {
    pub fn from_uw_per_ghz(uw: f64) -> Self {
        Self {
            g_w_per_ghz: uw * 1e-6,
        }
    }

    pub fn uw_per_ghz(&self) -> f64 {
        self.g_w_per_ghz * 1e6
    }

    /// PSD in W/Hz.
    pub fn w_per_hz(&self) -> f64 {
        self.g_w_per_ghz * 1e-9
    }
}

impl Default for PsdConfig {
    fn default() -> Self {
        Self::from_uw_per_ghz(25.0)
    }
}

/// ASE PSD in W/Hz accumulated over `n_spans` amplified spans.
pub fn ase_psd(n_spans: u32, fp: &FiberParams) -> f64 {
    let gain = 10f64.powf(fp.alpha_db_per_km * fp.span_km / 10.0);
    n_spans as f64 * (gain - 1.0) * 10f64.powf(fp.nsp_db / 10.0) * fp.h * fp.nu_hz
}

/// Per-span XCI efficiency (Hz²/W²) of an interferer of bandwidth
/// `b_interferer_ghz` whose center sits `delta_f_ghz` away.
pub fn xci_efficiency(delta_f_ghz: f64, b_interferer_ghz: f64, fp: &FiberParams) -> Result<f64, PhysicsError> {
    let half = b_interferer_ghz / 2.0;
    if !(delta_f_ghz > half) {
        return Err(PhysicsError::Overlap {
            delta_f_ghz,
            bandwidth_ghz: b_interferer_ghz,
        });
    }
    Ok(fp.xci_prefactor() * ((delta_f_ghz + half) / (delta_f_ghz - half)).ln())
}

/// Per-span SCI efficiency (Hz²/W²) on the same normalization as the XCI term.
pub fn sci_efficiency(bandwidth_ghz: f64, fp: &FiberParams) -> f64 {
    let b_hz = bandwidth_ghz * 1e9;
    let arg = PI * PI / 2.0 * fp.beta2_s2_per_km() * b_hz * b_hz / fp.alpha_lin();
    fp.xci_prefactor() / 2.0 * arg.asinh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub center_ghz: f64,
    pub slots: usize,
}

impl Placement {
    pub fn new(center_ghz: f64, slots: usize) -> Self {
        Self { center_ghz, slots }
    }

    pub fn from_channel(ch: &ChannelIndex, f_grid: f64) -> Self {
        Self::new(ch.center_ghz(f_grid), ch.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub placement: Placement,
    pub shared_spans: u32,
}

/// How the XCI efficiency is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum XciEval<'a> {
    Exact,
    Fitted(&'a XciFitTable),
}

/// NLI PSD (W/Hz) at the victim from every interferer, uniform launch PSD.
pub fn nli_psd(
    victim: &Placement,
    victim_spans: u32,
    interferers: &[Interferer],
    psd: &PsdConfig,
    fp: &FiberParams,
    f_grid: f64,
    eval: XciEval<'_>,
) -> Result<f64, PhysicsError> {
    let g = psd.w_per_hz();
    let mut sum = 0.0;
    for it in interferers {
        let delta = (it.placement.center_ghz - victim.center_ghz).abs();
        let min_gap = (victim.slots + it.placement.slots) as f64 * f_grid / 2.0;
        if delta < min_gap - 1e-9 {
            return Err(PhysicsError::Overlap {
                delta_f_ghz: delta,
                bandwidth_ghz: it.placement.slots as f64 * f_grid,
            });
        }
        let eta = match eval {
            XciEval::Exact => xci_efficiency(delta, it.placement.slots as f64 * f_grid, fp)?,
            XciEval::Fitted(table) => table.eval(victim.slots, it.placement.slots, delta),
        };
        sum += eta * it.shared_spans as f64;
    }
    let mut nli = g * g * g * sum;
    if fp.include_sci {
        nli += victim_spans as f64 * sci_efficiency(victim.slots as f64 * f_grid, fp) * g * g * g;
    }
    Ok(nli)
}

/// SNR in dB, `10·log10(G/G_ase) − 10·log10(1 + G_nli/G_ase)`.
pub fn snr_db(g_p: f64, g_ase: f64, g_nli: f64) -> Result<f64, PhysicsError> {
    if !(g_p > 0.0) {
        return Err(PhysicsError::NonPositive("launch PSD"));
    }
    if !(g_ase > 0.0) {
        return Err(PhysicsError::NonPositive("ASE PSD"));
    }
    if !(g_nli >= 0.0) {
        return Err(PhysicsError::NonPositive("NLI PSD"));
    }
    Ok(10.0 * (g_p / g_ase).log10() - x_db(g_ase, g_nli))
}

/// Relative NLI strength `10·log10(1 + G_nli/G_ase)`.
pub fn x_db(g_ase: f64, g_nli: f64) -> f64 {
    10.0 * (1.0 + g_nli / g_ase).log10()
}

pub fn snr_best_db(n_spans: u32, psd: &PsdConfig, fp: &FiberParams) -> f64 {
    10.0 * (psd.w_per_hz() / ase_psd(n_spans, fp)).log10()
}

/// Worst-case NLI ratio `G_nli/G_ase` for a channel when every other slot of
/// a `w`-slot fiber holds `min_slots`-wide interferers packed back to back
/// against it, all sharing the victim's spans.
pub fn worst_case_ratio(ch: &ChannelIndex, w: usize, min_slots: usize, psd: &PsdConfig, fp: &FiberParams, f_grid: f64) -> f64 {
    let g = psd.w_per_hz();
    let span_ase = ase_psd(1, fp);
    let left = (ch.start - 1) / min_slots;
    let right = w.saturating_sub(ch.end()) / min_slots;
    let b_int = min_slots as f64 * f_grid;
    let mut eta = 0.0;
    for k in 1..=left.max(right) {
        let delta = (ch.width as f64 / 2.0 + (k as f64 - 0.5) * min_slots as f64) * f_grid;
        let e = fp.xci_prefactor() * ((delta + b_int / 2.0) / (delta - b_int / 2.0)).ln();
        let copies = (k <= left) as u32 + (k <= right) as u32;
        eta += e * copies as f64;
    }
    if fp.include_sci {
        eta += sci_efficiency(ch.width as f64 * f_grid, fp);
    }
    g * g * g * eta / span_ase
}

/// 𝒳_worst in dB for `ch` on `route`; the span count cancels because each
/// interferer is assumed to share the whole route.
pub fn worst_case_nli_db(
    _route: &Route,
    ch: &ChannelIndex,
    bandwidths: &[usize],
    psd: &PsdConfig,
    fp: &FiberParams,
    w: usize,
    f_grid: f64,
) -> f64 {
    let min_slots = bandwidths.iter().copied().min().unwrap_or(ch.width).max(1);
    10.0 * (1.0 + worst_case_ratio(ch, w, min_slots, psd, fp, f_grid)).log10()
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FitError {
    #[error("{q} segments requested but only {samples} samples in the domain")]
    TooManySegments { q: usize, samples: usize },
    #[error("empty fitting domain [{f_min}, {f_max}] GHz")]
    EmptyDomain { f_min: f64, f_max: f64 },
    #[error("segment count must be at least one")]
    ZeroSegments,
}

/// Max-affine over-approximation of the XCI efficiency curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XciFit {
    pub b_victim: usize,
    pub b_interferer: usize,
    /// `(a_q, b_q)` with `a_q` per GHz.
    pub segments: Vec<(f64, f64)>,
    pub breakpoints: Vec<f64>,
    pub f_min: f64,
    pub f_max: f64,
    pub max_rel_error: f64,
}

impl XciFit {
    pub fn eval(&self, f_ghz: f64) -> f64 {
        self.segments
            .iter()
            .map(|&(a, b)| a * f_ghz + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Curve {
    fn chord(&self, i: usize, j: usize) -> (f64, f64) {
        let a = (self.y[j] - self.y[i]) / (self.x[j] - self.x[i]);
        (a, self.y[i] - a * self.x[i])
    }

    fn chord_error(&self, i: usize, j: usize) -> f64 {
        let (a, b) = self.chord(i, j);
        (i + 1..j)
            .map(|k| (a * self.x[k] + b - self.y[k]) / self.y[k])
            .fold(0.0, f64::max)
    }

    /// Farthest `j` whose chord from `i` stays within `eps`; the chord error
    /// grows with `j` on a convex curve, so a binary search applies.
    fn reach(&self, i: usize, eps: f64) -> usize {
        let (mut lo, mut hi) = (i + 1, self.x.len() - 1);
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.chord_error(i, mid) <= eps {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }

    fn breakpoints(&self, eps: f64) -> Vec<usize> {
        let mut pts = vec![0];
        let last = self.x.len() - 1;
        while *pts.last().unwrap() < last {
            let i = *pts.last().unwrap();
            pts.push(self.reach(i, eps));
        }
        pts
    }
}

/// Chord fit with at most `q` segments over `[f_min, f_max]` sampled every
/// `step` GHz, minimizing the worst relative over-estimate.
pub fn fit_xci_piecewise(
    b_victim: usize,
    b_interferer: usize,
    f_grid: f64,
    f_max: f64,
    fp: &FiberParams,
    q: usize,
    step: f64,
) -> Result<XciFit, FitError> {
    if q == 0 {
        return Err(FitError::ZeroSegments);
    }
    let f_min = (b_victim + b_interferer) as f64 * f_grid / 2.0;
    if !(f_max > f_min) {
        return Err(FitError::EmptyDomain { f_min, f_max });
    }
    let mut x = Vec::new();
    let mut k = 0usize;
    loop {
        let f = f_min + k as f64 * step;
        if f > f_max + 1e-9 {
            break;
        }
        x.push(f);
        k += 1;
    }
    if f_max - x.last().unwrap() > 1e-9 {
        x.push(f_max);
    }
    if q > x.len() - 1 {
        return Err(FitError::TooManySegments { q, samples: x.len() });
    }
    let b_int = b_interferer as f64 * f_grid;
    let y: Vec<f64> = x
        .iter()
        .map(|&f| xci_efficiency(f, b_int, fp).expect("domain starts beyond overlap"))
        .collect();
    let curve = Curve { x, y };
    let n = curve.x.len();
    let (mut lo, mut hi) = (0.0, curve.chord_error(0, n - 1));
    for _ in 0..100 {
        if hi - lo <= 1e-13 * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if curve.breakpoints(mid).len() - 1 <= q {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let pts = curve.breakpoints(hi);
    let segments: Vec<(f64, f64)> = pts.windows(2).map(|w| curve.chord(w[0], w[1])).collect();
    let fit = XciFit {
        b_victim,
        b_interferer,
        breakpoints: pts.iter().map(|&i| curve.x[i]).collect(),
        segments,
        f_min,
        f_max,
        max_rel_error: 0.0,
    };
    let max_rel_error = curve
        .x
        .iter()
        .zip(&curve.y)
        .map(|(&f, &v)| (fit.eval(f) - v) / v)
        .fold(0.0, f64::max);
    Ok(XciFit { max_rel_error, ..fit })
}

/// Fits for every ordered pair of bandwidths (in slots).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XciFitTable {
    pub f_grid: f64,
    pub f_max: f64,
    pub q: usize,
    pub step: f64,
    pub fits: BTreeMap<(usize, usize), XciFit>,
}

impl XciFitTable {
    pub fn build(
        slot_widths: &[usize],
        f_grid: f64,
        f_max: f64,
        fp: &FiberParams,
        q: usize,
        step: f64,
        exec: Exec,
    ) -> Result<Self, FitError> {
        let mut widths = slot_widths.to_vec();
        widths.sort_unstable();
        widths.dedup();
        let pairs: Vec<(usize, usize)> = widths
            .iter()
            .flat_map(|&a| widths.iter().map(move |&b| (a, b)))
            .collect();
        let fits = par::map(exec, &pairs, |&(a, b)| fit_xci_piecewise(a, b, f_grid, f_max, fp, q, step));
        let mut map = BTreeMap::new();
        for (pair, fit) in pairs.into_iter().zip(fits) {
            map.insert(pair, fit?);
        }
        Ok(Self {
            f_grid,
            f_max,
            q,
            step,
            fits: map,
        })
    }

    pub fn get(&self, b_victim: usize, b_interferer: usize) -> Option<&XciFit> {
        self.fits.get(&(b_victim, b_interferer))
    }

    /// Fitted efficiency; panics if the bandwidth pair was not fitted.
    pub fn eval(&self, b_victim: usize, b_interferer: usize, delta_f_ghz: f64) -> f64 {
        self.get(b_victim, b_interferer)
            .unwrap_or_else(|| panic!("no XCI fit for ({b_victim}, {b_interferer}) slots"))
            .eval(delta_f_ghz)
    }
}
