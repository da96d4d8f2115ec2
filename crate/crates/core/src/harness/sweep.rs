//! Error-vs-SNR and rate sweeps, emitted as [`Dataset`]s.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{estimate_error_from, BinAssignment, ErrorEstimate, TrialCampaign};
use crate::dataset::{Cell, Dataset};
use crate::error::{Error, Result};
use crate::rates::{classical_capacity, ea_capacity, optimize_rate, ErrorModel, GridSpec, RateOptimum};
use crate::receiver::{error_pair_for, NullPolicy};
use crate::rng::RandomStream;
use crate::stats::{derive_statistics, ScenarioParams};
use crate::theory::{cn_error_ideal, cn_error_recursive, helstrom_classical, helstrom_ea};

pub const SNR_DEFINITION: &str = "SNR = M*kappa*N_S/N_B; M = round(SNR*N_B/(kappa*N_S))";

/// Largest M simulated per point; larger points carry recursion values only.
pub const MC_MAX_MODES: u64 = 100_000;
pub const MC_MIN_TRIALS: u64 = 100;
pub const AUTO_TRIALS_FLOOR: u64 = 1_000;
pub const AUTO_TRIALS_CAP: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialBudget {
    /// [`auto_trials`] of the predicted error.
    Auto,
    Fixed(u64),
}

impl TrialBudget {
    pub fn trials_for(&self, predicted: f64) -> Result<u64> {
        match *self {
            TrialBudget::Auto => Ok(auto_trials(predicted)),
            TrialBudget::Fixed(n) if n >= MC_MIN_TRIALS => Ok(n),
            TrialBudget::Fixed(n) => Err(Error::invalid(
                "trials",
                format!("need at least {MC_MIN_TRIALS} trials per point, got {n}"),
            )),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TrialBudget::Auto => format!(
                "auto: max({AUTO_TRIALS_FLOOR}, ceil(100/P_predicted)) capped at {AUTO_TRIALS_CAP}"
            ),
            TrialBudget::Fixed(n) => n.to_string(),
        }
    }
}

/// max(10³, ⌈100/P⌉), capped at 10⁵.
pub fn auto_trials(predicted: f64) -> u64 {
    if !(predicted > 0.0) {
        return AUTO_TRIALS_CAP;
    }
    let want = (100.0 / predicted).ceil();
    if want >= AUTO_TRIALS_CAP as f64 {
        AUTO_TRIALS_CAP
    } else {
        (want as u64).max(AUTO_TRIALS_FLOOR)
    }
}

/// Modes per bin realizing `snr` for the given channel.
pub fn snr_modes(snr: f64, kappa: f64, n_signal: f64, n_noise: f64) -> Result<u64> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(Error::invalid("snr", format!("need a positive SNR, got {snr}")));
    }
    if !(n_noise > 0.0) {
        return Err(Error::invalid("n_noise", "SNR needs N_B > 0"));
    }
    if !(kappa > 0.0) || !(n_signal > 0.0) {
        return Err(Error::invalid("kappa", "SNR needs kappa*N_S > 0"));
    }
    let m = (snr * n_noise / (kappa * n_signal)).round();
    if !(m >= 1.0 && m < u64::MAX as f64) {
        return Err(Error::invalid("snr", format!("SNR {snr} gives M = {m}")));
    }
    Ok(m as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrSweepConfig {
    pub kappa: f64,
    pub n_signal: f64,
    pub n_noise: f64,
    pub num_bins: usize,
    pub snr_grid: Vec<f64>,
    pub trials: TrialBudget,
    pub policy: NullPolicy,
    pub master_seed: u64,
    pub h_assignment: BinAssignment,
    /// Simulate only points with M at most this; 0 disables Monte Carlo.
    pub mc_max_modes: u64,
}

impl SnrSweepConfig {
    pub fn new(kappa: f64, n_signal: f64, n_noise: f64, num_bins: usize, snr_grid: Vec<f64>) -> Self {
        Self {
            kappa,
            n_signal,
            n_noise,
            num_bins,
            snr_grid,
            trials: TrialBudget::Auto,
            policy: NullPolicy::default(),
            master_seed: 0,
            h_assignment: BinAssignment::UniformRandom,
            mc_max_modes: MC_MAX_MODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr: f64,
    pub modes_per_bin: u64,
    pub alpha_one: f64,
    pub e_thermal: f64,
    pub p_false_alarm: f64,
    pub p_false_negative: f64,
    pub p_cn_recursive: f64,
    /// `None` when M exceeds the Monte-Carlo cap.
    pub mc: Option<ErrorEstimate>,
    /// Ideal conditional nulling at α₁² = SNR.
    pub p_ideal_exact: f64,
    pub p_ideal_approx: f64,
    pub p_ea_helstrom: f64,
    pub p_classical_helstrom: f64,
    pub p_classical_helstrom_high_noise: f64,
}

impl SnrPoint {
    pub const COLUMNS: [&'static str; 16] = [
        "snr",
        "M",
        "alpha_one",
        "e_thermal",
        "p1",
        "p2",
        "P_cn_recursive",
        "P_cn_mc",
        "P_cn_mc_se",
        "mc_trials",
        "mc_within_3se",
        "P_ideal_exact",
        "P_ideal_approx",
        "P_EH",
        "P_CH",
        "P_CH_high_noise",
    ];

    fn cells(&self) -> Vec<Cell> {
        let mc = self.mc.as_ref();
        vec![
            Cell::Float(self.snr),
            Cell::Int(self.modes_per_bin),
            Cell::Float(self.alpha_one),
            Cell::Float(self.e_thermal),
            Cell::Float(self.p_false_alarm),
            Cell::Float(self.p_false_negative),
            Cell::Float(self.p_cn_recursive),
            mc.map_or(Cell::Null, |e| Cell::Float(e.p_hat)),
            mc.map_or(Cell::Null, |e| Cell::Float(e.std_err)),
            mc.map_or(Cell::Null, |e| Cell::Int(e.trials)),
            mc.map_or(Cell::Null, |e| Cell::Bool(e.within(3.0))),
            Cell::Float(self.p_ideal_exact),
            Cell::Float(self.p_ideal_approx),
            Cell::Float(self.p_ea_helstrom),
            Cell::Float(self.p_classical_helstrom),
            Cell::Float(self.p_classical_helstrom_high_noise),
        ]
    }
}

/// Analytic columns of one SNR point, without Monte Carlo.
fn analytic_point(cfg: &SnrSweepConfig, snr: f64) -> Result<(ScenarioParams, SnrPoint)> {
    let modes = snr_modes(snr, cfg.kappa, cfg.n_signal, cfg.n_noise)?;
    if modes < cfg.num_bins as u64 {
        return Err(Error::invalid(
            "snr",
            format!("SNR {snr} gives M = {modes} < m = {}", cfg.num_bins),
        ));
    }
    let params = ScenarioParams::new(
        cfg.kappa,
        cfg.n_signal,
        cfg.n_noise,
        cfg.num_bins,
        modes as usize,
    )?;
    let stats = derive_statistics(&params)?;
    let pair = error_pair_for(stats.alpha_one, stats.e_thermal)?;
    let ideal = cn_error_ideal(cfg.num_bins, snr.sqrt())?;
    let m_f = modes as f64;
    let ch = helstrom_classical(cfg.num_bins, m_f, cfg.kappa, cfg.n_signal, cfg.n_noise)?;
    let point = SnrPoint {
        snr,
        modes_per_bin: modes,
        alpha_one: stats.alpha_one,
        e_thermal: stats.e_thermal,
        p_false_alarm: pair.p_false_alarm,
        p_false_negative: pair.p_false_negative,
        p_cn_recursive: cn_error_recursive(cfg.num_bins, &pair)?,
        mc: None,
        p_ideal_exact: ideal.exact,
        p_ideal_approx: ideal.approx,
        p_ea_helstrom: helstrom_ea(cfg.num_bins, m_f, cfg.kappa, cfg.n_signal, cfg.n_noise)?,
        p_classical_helstrom: ch.exact,
        p_classical_helstrom_high_noise: ch.high_noise,
    };
    Ok((params, point))
}

/// Evaluates every SNR point. Point `k` simulates from substream `k` of the
/// seed, so its result does not depend on the other points.
///
/// `progress(k, total, point)` is called after each point.
pub fn sweep_error_vs_snr(
    cfg: &SnrSweepConfig,
    mut progress: impl FnMut(usize, usize, &SnrPoint),
) -> Result<Vec<SnrPoint>> {
    if cfg.snr_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let root = RandomStream::new(cfg.master_seed);
    let total = cfg.snr_grid.len();
    let mut out = Vec::with_capacity(total);
    for (k, &snr) in cfg.snr_grid.iter().enumerate() {
        let (params, mut point) = analytic_point(cfg, snr)?;
        if point.modes_per_bin <= cfg.mc_max_modes {
            let campaign = TrialCampaign {
                policy: cfg.policy,
                h_assignment: cfg.h_assignment,
                ..TrialCampaign::new(
                    params,
                    cfg.trials.trials_for(point.p_cn_recursive)?,
                    cfg.master_seed,
                )
            };
            point.mc = Some(estimate_error_from(&campaign, &root.child(k as u64))?);
        }
        progress(k, total, &point);
        out.push(point);
    }
    Ok(out)
}

/// Packages a finished SNR sweep with its metadata.
pub fn snr_dataset(cfg: &SnrSweepConfig, points: &[SnrPoint]) -> Dataset {
    let mut ds = Dataset::new(&SnrPoint::COLUMNS);
    ds.set_meta("kind", json!("error_vs_snr"));
    ds.set_meta("kappa", json!(cfg.kappa));
    ds.set_meta("n_signal", json!(cfg.n_signal));
    ds.set_meta("n_noise", json!(cfg.n_noise));
    ds.set_meta("num_bins", json!(cfg.num_bins));
    ds.set_meta("snr_definition", json!(SNR_DEFINITION));
    ds.set_meta("snr_grid", json!(cfg.snr_grid));
    ds.set_meta("trials", json!(cfg.trials.describe()));
    ds.set_meta("policy", json!(cfg.policy.as_str()));
    ds.set_meta("seed", json!(cfg.master_seed));
    ds.set_meta(
        "true_bin",
        match cfg.h_assignment {
            BinAssignment::UniformRandom => json!("uniform"),
            BinAssignment::Fixed(h) => json!(h + 1),
        },
    );
    ds.set_meta("mc_max_modes", json!(cfg.mc_max_modes));
    ds.set_meta(
        "ideal_columns",
        json!("ideal conditional nulling (p1 = 0, p2 = exp(-SNR))"),
    );
    for p in points {
        ds.push_row(p.cells());
    }
    ds
}

/// One n_S point of the rate comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n_s: f64,
    pub classical: f64,
    pub entanglement_assisted: f64,
    pub helstrom: Option<RateOptimum>,
    pub nulling: Option<RateOptimum>,
}

impl RateRow {
    pub const COLUMNS: [&'static str; 17] = [
        "n_s",
        "C",
        "C_E",
        "R_H",
        "R_cn",
        "R_H_m",
        "R_H_M",
        "R_H_P",
        "R_H_boundary",
        "R_cn_m",
        "R_cn_M",
        "R_cn_P",
        "R_cn_boundary",
        "C_E_over_C",
        "R_H_over_C",
        "R_cn_over_C",
        "R_H_over_C_E",
    ];

    fn cells(&self) -> Vec<Cell> {
        let opt = |o: &Option<RateOptimum>| -> [Cell; 5] {
            match o {
                Some(o) => [
                    Cell::Float(o.point.rate),
                    Cell::Int(o.point.num_bins as u64),
                    Cell::Int(o.point.modes_per_bin),
                    Cell::Float(o.point.error_prob),
                    Cell::Bool(o.on_boundary),
                ],
                None => [Cell::Null, Cell::Null, Cell::Null, Cell::Null, Cell::Null],
            }
        };
        let [rh, rh_m, rh_mm, rh_p, rh_b] = opt(&self.helstrom);
        let [rc, rc_m, rc_mm, rc_p, rc_b] = opt(&self.nulling);
        let ratio = |o: &Option<RateOptimum>, d: f64| {
            o.as_ref().map_or(Cell::Null, |o| Cell::Float(o.point.rate / d))
        };
        vec![
            Cell::Float(self.n_s),
            Cell::Float(self.classical),
            Cell::Float(self.entanglement_assisted),
            rh,
            rc,
            rh_m,
            rh_mm,
            rh_p,
            rh_b,
            rc_m,
            rc_mm,
            rc_p,
            rc_b,
            Cell::Float(self.entanglement_assisted / self.classical),
            ratio(&self.helstrom, self.classical),
            ratio(&self.nulling, self.classical),
            ratio(&self.helstrom, self.entanglement_assisted),
        ]
    }
}

/// Capacities and optimized PPM rates for each n_S.
pub fn sweep_rates(
    kappa: f64,
    n_noise: f64,
    n_s_grid: &[f64],
    models: &[ErrorModel],
    search: &GridSpec,
    mut progress: impl FnMut(usize, usize, &RateRow),
) -> Result<Vec<RateRow>> {
    if n_s_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let total = n_s_grid.len();
    let mut out = Vec::with_capacity(total);
    for (k, &n_s) in n_s_grid.iter().enumerate() {
        let run = |model: ErrorModel| -> Result<Option<RateOptimum>> {
            if models.contains(&model) {
                optimize_rate(kappa, n_noise, n_s, model, search).map(Some)
            } else {
                Ok(None)
            }
        };
        let row = RateRow {
            n_s,
            classical: classical_capacity(kappa, n_noise, n_s)?,
            entanglement_assisted: ea_capacity(kappa, n_noise, n_s)?.0,
            helstrom: run(ErrorModel::HelstromEa)?,
            nulling: run(ErrorModel::CnRecursion)?,
        };
        progress(k, total, &row);
        out.push(row);
    }
    Ok(out)
}

/// Packages a finished rate sweep with its metadata.
pub fn rates_dataset(
    kappa: f64,
    n_noise: f64,
    models: &[ErrorModel],
    search: &GridSpec,
    rows: &[RateRow],
) -> Dataset {
    let mut ds = Dataset::new(&RateRow::COLUMNS);
    ds.set_meta("kind", json!("rates_vs_n_s"));
    ds.set_meta("kappa", json!(kappa));
    ds.set_meta("n_noise", json!(n_noise));
    ds.set_meta(
        "models",
        json!(models.iter().map(|m| m.as_str()).collect::<Vec<_>>()),
    );
    ds.set_meta("rate_definition", json!("I(P)/(M*m) bits per mode, N_S = m*n_s"));
    let (lo, hi) = (search.modes.iter().min(), search.modes.iter().max());
    ds.set_meta("bins", json!(search.bins));
    ds.set_meta("modes_range", json!([lo, hi]));
    ds.set_meta("modes_grid_points", json!(search.modes.len()));
    ds.set_meta("refine", json!(search.refine));
    for r in rows {
        ds.push_row(r.cells());
    }
    ds
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_budget_rule() {
        assert_eq!(auto_trials(0.5), 1_000);
        assert_eq!(auto_trials(0.05), 2_000);
        assert_eq!(auto_trials(1e-3), 100_000);
        assert_eq!(auto_trials(1e-9), 100_000);
        assert_eq!(auto_trials(0.0), 100_000);
        assert!(TrialBudget::Fixed(99).trials_for(0.1).is_err());
        assert_eq!(TrialBudget::Fixed(100).trials_for(0.1).unwrap(), 100);
    }

    #[test]
    fn snr_to_modes() {
        assert_eq!(snr_modes(0.1, 0.1, 0.01, 10.0).unwrap(), 1_000);
        assert_eq!(snr_modes(10.0, 0.1, 0.001, 10.0).unwrap(), 1_000_000);
        assert!(snr_modes(0.0, 0.1, 0.01, 10.0).is_err());
        assert!(snr_modes(1.0, 0.1, 0.01, 0.0).is_err());
    }

    #[test]
    fn too_few_modes_is_rejected() {
        let cfg = SnrSweepConfig::new(0.1, 0.01, 10.0, 10, vec![1e-4]);
        assert!(sweep_error_vs_snr(&cfg, |_, _, _| {}).is_err());
    }

    #[test]
    fn analytic_sweep_without_monte_carlo() {
        let mut cfg = SnrSweepConfig::new(0.1, 0.01, 10.0, 10, vec![0.1, 1.0, 10.0]);
        cfg.mc_max_modes = 0;
        let mut seen = 0;
        let pts = sweep_error_vs_snr(&cfg, |_, _, _| seen += 1).unwrap();
        assert_eq!(seen, 3);
        assert!(pts.iter().all(|p| p.mc.is_none()));
        assert!(pts.windows(2).all(|w| w[1].p_cn_recursive < w[0].p_cn_recursive));
        let ds = snr_dataset(&cfg, &pts);
        assert_eq!(ds.rows.len(), 3);
        assert_eq!(ds.columns.len(), SnrPoint::COLUMNS.len());
    }
}
