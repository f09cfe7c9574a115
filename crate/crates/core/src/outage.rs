//! Outage probability of joint relay selection and its diversity slope.
//!
//! Every gain is divided by the direct link's mean gain `K · D^-p`, so `rho`
//! is the mean received SNR of the direct link. A trial draws one fading
//! realization and evaluates the uplink (MS → BS) and the downlink (BS → MS,
//! hop roles swapped) on it:
//!
//! - the direct attempt fails when `log2(1 + rho h_D) < R`;
//! - Γ keeps relays that can decode the source, Σ those whose second hop
//!   completes the transmission together with the direct copy;
//! - outage is a failed direct attempt with Σ empty or a failed two-hop
//!   combination `0.5 log2(1 + rho (h_D + h2)) < R` for the selected relay.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::link_budget::rate_factor_f;
use crate::model::{check_zeta, pathloss_gain, sample_fading, Geometry, LinkState, SystemParams};
use crate::seed;
use crate::selection::selection_metric;

/// Points with fewer weighted outage events are left out of the slope fit.
pub const MIN_EVENTS_FOR_FIT: f64 = 50.0;

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// The same `R` at every SNR (diversity at `r → 0`).
    Fixed(f64),
    /// `R = r · log2(rho)`.
    Multiplexing(f64),
}

impl RateMode {
    pub fn rate_at(&self, rho: f64) -> f64 {
        match *self {
            RateMode::Fixed(r) => r,
            RateMode::Multiplexing(r) => r * rho.log2(),
        }
    }

    /// Multiplexing gain the slope is compared against.
    pub fn multiplexing_gain(&self) -> f64 {
        match *self {
            RateMode::Fixed(_) => 0.0,
            RateMode::Multiplexing(r) => r,
        }
    }
}

/// How Γ and Σ are formed inside an outage trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdModel {
    /// `h ≥ (2^(2R) - 1) / rho`, matching the information-theoretic hops.
    #[default]
    Capacity,
    /// The battery thresholds of the handshake, `g_th / (P_max - P_C)`.
    Mqam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkDirection {
    Uplink,
    Downlink,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmtConfig {
    pub rate: RateMode,
    /// Linear SNRs, strictly increasing.
    pub snr_points_rho: Vec<f64>,
    pub trials_per_point: u64,
    pub zeta: f64,
    pub geometry: Geometry,
    pub params: SystemParams,
    pub threshold_model: ThresholdModel,
    pub seed: u64,
}

impl DmtConfig {
    pub fn relay_count_n(&self) -> usize {
        self.geometry.relay_count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(domain("trials_per_point must be >= 1"));
        }
        if self.snr_points_rho.is_empty() {
            return Err(domain("at least one SNR point is required"));
        }
        if self.snr_points_rho.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(domain("SNR points must be finite and > 0"));
        }
        if self.snr_points_rho.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("SNR points must be strictly increasing"));
        }
        match self.rate {
            RateMode::Fixed(r) | RateMode::Multiplexing(r) if !(r.is_finite() && r > 0.0) => {
                return Err(domain(format!("rate parameter must be > 0, got {r}")));
            }
            _ => {}
        }
        if let RateMode::Multiplexing(_) = self.rate {
            if self.snr_points_rho.iter().any(|&r| r <= 1.0) {
                return Err(domain("multiplexing mode needs rho > 1 (0 dB)"));
            }
        }
        check_zeta(self.zeta)?;
        self.params.validate()
    }
}

/// `log2(1 + rho h_d)`.
pub fn mutual_info_direct(rho: f64, h_d: f64) -> f64 {
    (rho * h_d).ln_1p() / std::f64::consts::LN_2
}

/// `0.5 log2(1 + rho (h_d + h2))`: two channel uses, combined at the
/// destination.
pub fn mutual_info_two_hop(rho: f64, h_d: f64, h2_selected: f64) -> f64 {
    0.5 * (rho * (h_d + h2_selected)).ln_1p() / std::f64::consts::LN_2
}

/// Everything one direction of one trial produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrialOutcome {
    pub outage: bool,
    pub direct_ok: bool,
    pub gamma_size: usize,
    pub sigma_size: usize,
    pub selected: Option<usize>,
    /// A relay admitted to Σ failed the two-hop rate. Impossible under the
    /// capacity thresholds.
    pub admission_violation: bool,
}

/// First-hop admission threshold in normalized gain units.
fn thresholds(
    rho: f64,
    rate_r: f64,
    model: ThresholdModel,
    params: &SystemParams,
    reference_gain: f64,
) -> f64 {
    match model {
        ThresholdModel::Capacity => (2f64.powf(2.0 * rate_r) - 1.0) / rho,
        ThresholdModel::Mqam => {
            rate_factor_f(2.0 * rate_r, params) / params.radiated_budget() / reference_gain
        }
    }
}

/// Evaluates one direction on normalized gains. `threshold` is the first-hop
/// threshold; the second hop uses `threshold (1 - h_D/h_src)+`.
pub fn trial_outcome(
    rho: f64,
    rate_r: f64,
    links: &LinkState,
    direction: LinkDirection,
    zeta: f64,
    threshold: f64,
) -> TrialOutcome {
    let hd = links.h_direct;
    let mut out = TrialOutcome {
        direct_ok: mutual_info_direct(rho, hd) >= rate_r,
        ..Default::default()
    };
    if out.direct_ok {
        return out;
    }
    let mut best: Option<(f64, usize)> = None;
    for i in 0..links.relay_count() {
        let (src_hop, dst_hop) = match direction {
            LinkDirection::Uplink => (links.h1[i], links.h2[i]),
            LinkDirection::Downlink => (links.h2[i], links.h1[i]),
        };
        if src_hop < threshold {
            continue;
        }
        out.gamma_size += 1;
        if dst_hop < threshold * (1.0 - hd / src_hop).max(0.0) {
            continue;
        }
        out.sigma_size += 1;
        let m = selection_metric(links.h1[i], links.h2[i], hd, zeta).unwrap_or(f64::INFINITY);
        if best.is_none_or(|(bm, _)| m < bm) {
            best = Some((m, i));
        }
    }
    match best {
        None => out.outage = true,
        Some((_, i)) => {
            out.selected = Some(i);
            let dst_hop = match direction {
                LinkDirection::Uplink => links.h2[i],
                LinkDirection::Downlink => links.h1[i],
            };
            let fail = mutual_info_two_hop(rho, hd, dst_hop) < rate_r;
            out.outage = fail;
            out.admission_violation = fail;
        }
    }
    out
}

/// Outage of one direction with capacity thresholds.
pub fn single_trial_outage(
    rho: f64,
    rate_r: f64,
    links: &LinkState,
    direction: LinkDirection,
) -> bool {
    let th = (2f64.powf(2.0 * rate_r) - 1.0) / rho;
    trial_outcome(rho, rate_r, links, direction, 0.5, th).outage
}

/// Tallies at one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutagePoint {
    pub rho: f64,
    pub rate_r: f64,
    pub trials: u64,
    pub uplink_outages: u64,
    pub downlink_outages: u64,
    pub both_outages: u64,
    /// `zeta · uplink + (1 - zeta) · downlink`.
    pub outage_count: f64,
    pub p_out: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub admission_violations: u64,
}

impl OutagePoint {
    pub fn rho_db(&self) -> f64 {
        10.0 * self.rho.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Diversity estimate, minus the log-log slope.
    pub diversity: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    pub relay_count: usize,
    pub multiplexing_r: f64,
    pub zeta: f64,
    pub points: Vec<OutagePoint>,
    /// `None` when fewer than two points have enough events.
    pub fitted_slope: Option<SlopeFit>,
    pub theoretical_d: f64,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    ul: u64,
    dl: u64,
    both: u64,
    violations: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            ul: self.ul + o.ul,
            dl: self.dl + o.dl,
            both: self.both + o.both,
            violations: self.violations + o.violations,
        }
    }
}

/// Monte-Carlo outage curve. Trial `t` at point `k` uses the stream
/// `(seed, k, t)`, so the result is independent of the thread count.
pub fn estimate_outage_curve(config: &DmtConfig) -> Result<OutageCurve> {
    config.validate()?;
    let params = &config.params;
    let reference = pathloss_gain(config.geometry.direct_distance(), params)?;
    let n = config.relay_count_n();
    let mut mean1 = Vec::with_capacity(n);
    let mut mean2 = Vec::with_capacity(n);
    for j in 0..n {
        let (d1, d2) = config.geometry.relay_distances(j);
        mean1.push(pathloss_gain(d1, params)? / reference);
        mean2.push(pathloss_gain(d2, params)? / reference);
    }
    let zeta = config.zeta;

    let mut points = Vec::with_capacity(config.snr_points_rho.len());
    for (k, &rho) in config.snr_points_rho.iter().enumerate() {
        let rate = config.rate.rate_at(rho);
        let th = thresholds(rho, rate, config.threshold_model, params, reference);
        let tally = (0..config.trials_per_point)
            .into_par_iter()
            .map_init(
                || LinkState {
                    h1: vec![0.0; n],
                    h2: vec![0.0; n],
                    h_direct: 0.0,
                    fading: None,
                },
                |links, t| {
                    let mut rng = seed::stream(config.seed, &[k as u64, t]);
                    links.h_direct = sample_fading(&mut rng);
                    for j in 0..n {
                        links.h1[j] = mean1[j] * sample_fading(&mut rng);
                        links.h2[j] = mean2[j] * sample_fading(&mut rng);
                    }
                    let ul = trial_outcome(rho, rate, links, LinkDirection::Uplink, zeta, th);
                    let dl = trial_outcome(rho, rate, links, LinkDirection::Downlink, zeta, th);
                    Tally {
                        ul: ul.outage as u64,
                        dl: dl.outage as u64,
                        both: (ul.outage && dl.outage) as u64,
                        violations: ul.admission_violation as u64
                            + dl.admission_violation as u64,
                    }
                },
            )
            .reduce(Tally::default, Tally::merge);
        points.push(summarize_point(rho, rate, config.trials_per_point, zeta, tally));
    }

    let fitted_slope = fit_slope(&points);
    let r = config.rate.multiplexing_gain();
    Ok(OutageCurve {
        relay_count: n,
        multiplexing_r: r,
        zeta,
        points,
        fitted_slope,
        theoretical_d: theoretical_dmt(n, r),
    })
}

fn summarize_point(rho: f64, rate_r: f64, trials: u64, zeta: f64, t: Tally) -> OutagePoint {
    let nt = trials as f64;
    let (ul, dl, both) = (t.ul as f64, t.dl as f64, t.both as f64);
    let weighted = zeta * ul + (1.0 - zeta) * dl;
    let p = weighted / nt;
    // Per-trial outcome Y = zeta U + (1 - zeta) D.
    let second = (zeta * zeta * ul + (1.0 - zeta).powi(2) * dl + 2.0 * zeta * (1.0 - zeta) * both)
        / nt;
    let var = ((second - p * p).max(0.0)) / nt;
    let se = var.sqrt();
    OutagePoint {
        rho,
        rate_r,
        trials,
        uplink_outages: t.ul,
        downlink_outages: t.dl,
        both_outages: t.both,
        outage_count: weighted,
        p_out: p,
        std_error: se,
        ci_low: (p - Z95 * se).max(0.0),
        ci_high: (p + Z95 * se).min(1.0),
        admission_violations: t.violations,
    }
}

/// Weighted least squares of `log2 P` on `log2 rho`, each point weighted by
/// the inverse delta-method variance `(SE / (P ln 2))^2`.
pub fn fit_slope(points: &[OutagePoint]) -> Option<SlopeFit> {
    let usable: Vec<(f64, f64, f64)> = points
        .iter()
        .filter(|p| p.outage_count >= MIN_EVENTS_FOR_FIT && p.p_out > 0.0 && p.std_error > 0.0)
        .map(|p| {
            let sd = p.std_error / (p.p_out * std::f64::consts::LN_2);
            (p.rho.log2(), p.p_out.log2(), 1.0 / (sd * sd))
        })
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let sw: f64 = usable.iter().map(|u| u.2).sum();
    let xm = usable.iter().map(|u| u.2 * u.0).sum::<f64>() / sw;
    let ym = usable.iter().map(|u| u.2 * u.1).sum::<f64>() / sw;
    let sxx: f64 = usable.iter().map(|u| u.2 * (u.0 - xm).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|u| u.2 * (u.0 - xm) * (u.1 - ym)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let diversity = -sxy / sxx;
    let se = (1.0 / sxx).sqrt();
    Some(SlopeFit {
        diversity,
        std_error: se,
        ci_low: diversity - Z95 * se,
        ci_high: diversity + Z95 * se,
        points_used: usable.len(),
    })
}

/// `(n + 1) · max(0, 1 - (2n + 1) r / (n + 1))`.
pub fn theoretical_dmt(n: usize, r: f64) -> f64 {
    let n = n as f64;
    (n + 1.0) * (1.0 - (2.0 * n + 1.0) * r / (n + 1.0)).max(0.0)
}

/// Closed-form direct-link outage `1 - exp(-(2^R - 1) / rho)` for a unit-mean
/// exponential gain.
pub fn direct_outage_probability(rho: f64, rate_r: f64) -> f64 {
    -(-(2f64.powf(rate_r) - 1.0) / rho).exp_m1()
}

/// Lower and upper probabilities bracketing the chance that an admitted
/// first hop still fails the second-hop test, for a relay–destination gain
/// with mean `mean_h2`.
pub fn sigma_rejection_bounds(rho: f64, rate_r: f64, mean_h2: f64) -> (f64, f64) {
    let x = 2f64.powf(rate_r);
    let th = (x * x - 1.0) / rho;
    let lower_th = x * (x * x - 1.0) / (rho * (x + 1.0));
    let cdf = |t: f64| -(-t / mean_h2).exp_m1();
    (cdf(lower_th), cdf(th))
}

impl OutageCurve {
    pub fn total_admission_violations(&self) -> u64 {
        self.points.iter().map(|p| p.admission_violations).sum()
    }

    /// `rho_db,rate_r,p_out,trials,ci_low,ci_high,theoretical_d` table.
    pub fn to_table(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::from("rho_db,rate_r,p_out,trials,ci_low,ci_high,theoretical_d\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                p.rho_db(),
                p.rate_r,
                p.p_out,
                p.trials,
                p.ci_low,
                p.ci_high,
                self.theoretical_d
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Point2;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn mutual_info_edges() {
        assert_eq!(mutual_info_direct(10.0, 0.0), 0.0);
        assert_eq!(mutual_info_direct(4.0, 0.25), 1.0);
        assert_eq!(mutual_info_two_hop(10.0, 0.0, 0.0), 0.0);
        assert!((mutual_info_two_hop(3.0, 0.4, 0.6) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mutual_info_high_precision() {
        assert!(rel(mutual_info_direct(37.0, 0.3), 3.596_935_142_387_232_164_5) < 1e-14);
        assert!(rel(mutual_info_two_hop(37.0, 0.3, 1.7), 3.114_409_345_247_940_438_6) < 1e-14);
    }

    #[test]
    fn theoretical_values() {
        assert_eq!(theoretical_dmt(3, 0.0), 4.0);
        assert_eq!(theoretical_dmt(2, 3.0 / 5.0), 0.0);
        assert_eq!(theoretical_dmt(1, 0.25), 1.25);
        assert_eq!(theoretical_dmt(1, 0.5), 0.5);
        assert_eq!(theoretical_dmt(0, 0.3), 0.7);
        assert_eq!(theoretical_dmt(0, 1.5), 0.0);
    }

    #[test]
    fn trial_edges() {
        let strong = LinkState::new(vec![1.0], vec![1.0], 1e6).unwrap();
        assert!(!single_trial_outage(10.0, 2.0, &strong, LinkDirection::Uplink));
        let weak = LinkState::new(vec![1e-12], vec![1e-12], 1e-12).unwrap();
        assert!(single_trial_outage(10.0, 2.0, &weak, LinkDirection::Uplink));
        assert!(single_trial_outage(10.0, 2.0, &weak, LinkDirection::Downlink));
    }

    #[test]
    fn no_relays_means_direct_only() {
        let rho = 100.0;
        for hd in [0.001, 0.0099, 0.0101, 0.5] {
            let ls = LinkState::new(vec![], vec![], hd).unwrap();
            let want = mutual_info_direct(rho, hd) < 1.0;
            assert_eq!(single_trial_outage(rho, 1.0, &ls, LinkDirection::Uplink), want);
        }
    }

    #[test]
    fn downlink_swaps_hops() {
        // Good MS-relay, bad relay-BS: uplink fails Σ, downlink fails Γ.
        let ls = LinkState::new(vec![50.0], vec![0.01], 0.001).unwrap();
        let th = (2f64.powi(2) - 1.0) / 10.0;
        let ul = trial_outcome(10.0, 1.0, &ls, LinkDirection::Uplink, 0.5, th);
        assert_eq!((ul.gamma_size, ul.sigma_size), (1, 0));
        let dl = trial_outcome(10.0, 1.0, &ls, LinkDirection::Downlink, 0.5, th);
        assert_eq!((dl.gamma_size, dl.sigma_size), (0, 0));
        assert!(ul.outage && dl.outage);
    }

    fn config(n_relays: usize, zeta: f64, trials: u64) -> DmtConfig {
        let relays = vec![Point2::new(250.0, 0.0); n_relays];
        DmtConfig {
            rate: RateMode::Fixed(1.0),
            snr_points_rho: vec![10.0, 31.6, 100.0],
            trials_per_point: trials,
            zeta,
            geometry: Geometry::on_axis(500.0, relays).unwrap(),
            params: SystemParams::reference(),
            threshold_model: ThresholdModel::Capacity,
            seed: 11,
        }
    }

    #[test]
    fn weight_collapse_and_decomposition() {
        let up = estimate_outage_curve(&config(1, 1.0, 20_000)).unwrap();
        let down = estimate_outage_curve(&config(1, 0.0, 20_000)).unwrap();
        let mixed = estimate_outage_curve(&config(1, 0.3, 20_000)).unwrap();
        for ((u, d), m) in up.points.iter().zip(&down.points).zip(&mixed.points) {
            assert_eq!(u.p_out, u.uplink_outages as f64 / u.trials as f64);
            assert_eq!(m.uplink_outages, u.uplink_outages);
            assert_eq!(m.downlink_outages, d.downlink_outages);
            let combo = 0.3 * u.p_out + 0.7 * d.p_out;
            assert!((m.p_out - combo).abs() < 1e-15);
        }
    }

    #[test]
    fn no_admission_violations() {
        let c = estimate_outage_curve(&config(2, 0.5, 20_000)).unwrap();
        assert_eq!(c.total_admission_violations(), 0);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let cfg = config(1, 0.5, 5_000);
        let run = |w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .unwrap()
                .install(|| estimate_outage_curve(&cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn sparse_events_leave_slope_unavailable() {
        let c = estimate_outage_curve(&config(2, 0.5, 200)).unwrap();
        assert!(c.fitted_slope.is_none());
    }

    #[test]
    fn config_validation() {
        let mut c = config(1, 0.5, 10);
        c.snr_points_rho = vec![10.0, 5.0];
        assert!(c.validate().is_err());
        let mut c = config(1, 0.5, 10);
        c.trials_per_point = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn bounds_are_ordered() {
        let (lo, hi) = sigma_rejection_bounds(1000.0, 1.0, 13.55);
        assert!(0.0 < lo && lo < hi && hi < 1.0);
    }
}
