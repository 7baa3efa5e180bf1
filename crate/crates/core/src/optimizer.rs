//! One-dimensional parameter sweeps of QNG depth, golden-section refinement,
//! and the CW versus pulsed SPDC comparison.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ClickProbabilities;
use crate::sources::{
    background_counts, BackgroundCoupling, ModeStatistics, SourceConfig, SpdcConfig,
    SpdcRegime,
};
use crate::witnesses::{depth_bisection, qng_depth_closed_form, DepthReport, Feature};

/// Relative parameter tolerance of [`refine`].
pub const REFINE_REL_TOL: f64 = 1e-4;
/// Relative `p1` mismatch above which a CW/pulsed comparison is flagged.
pub const P1_MATCH_TOL: f64 = 0.01;

pub const PROFILE_CSV_HEADER: &str = "parameter_value,p1,p2plus,t_min,depth_db";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Coincidence window of an SPDC source, seconds.
    Tau,
    /// Pulsed SPDC gain.
    Gain,
    /// Signal-arm efficiency of an SPDC source, or `eta` of the ideal source.
    EtaSignal,
    LambdaBg,
    EtaCol,
}

impl SweepParameter {
    /// `source` with this parameter set to `value`.
    pub fn apply(self, source: &SourceConfig, value: f64) -> Result<SourceConfig> {
        let mismatch = || {
            Error::Usage(format!(
                "parameter {self:?} does not apply to this source kind"
            ))
        };
        let out = match (self, *source) {
            (SweepParameter::Tau, SourceConfig::Spdc(c)) => SourceConfig::Spdc(SpdcConfig {
                tau_s: value,
                ..c
            }),
            (SweepParameter::Gain, SourceConfig::Spdc(c)) if c.is_pulsed() => {
                SourceConfig::Spdc(SpdcConfig { g: value, ..c })
            }
            (SweepParameter::EtaSignal, SourceConfig::Spdc(c)) => {
                SourceConfig::Spdc(SpdcConfig {
                    eta_signal: value,
                    ..c
                })
            }
            (SweepParameter::EtaSignal, SourceConfig::Ideal(mut c)) => {
                c.eta = value;
                SourceConfig::Ideal(c)
            }
            (SweepParameter::LambdaBg, SourceConfig::QuantumDot(mut c)) => {
                c.lambda_bg = value;
                SourceConfig::QuantumDot(c)
            }
            (SweepParameter::EtaCol, SourceConfig::QuantumDot(mut c)) => {
                c.eta_col = value;
                SourceConfig::QuantumDot(c)
            }
            _ => return Err(mismatch()),
        };
        out.validate()?;
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    /// Strictly increasing parameter values.
    pub grid: Vec<f64>,
    #[serde(alias = "source")]
    pub fixed: SourceConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Validation("sweep grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation(
                "sweep grid must be strictly increasing".into(),
            ));
        }
        for &v in &self.grid {
            self.parameter.apply(&self.fixed, v)?;
        }
        Ok(())
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    grid
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub parameter_value: f64,
    pub p1: f64,
    pub p2plus: f64,
    pub t_min: f64,
    pub depth_db: f64,
}

/// QNG depth of a source: bisection on the exact state, except for the
/// quantum-dot constant-`p2+` report mode, which has no state of its own and
/// uses the closed form on the reported clicks.
pub fn source_depth(source: &SourceConfig) -> Result<(ClickProbabilities, DepthReport)> {
    let clicks = source.reported_clicks()?;
    let report = match source {
        SourceConfig::QuantumDot(c) if c.bg_coupling == BackgroundCoupling::Independent => {
            qng_depth_closed_form(&clicks)?
        }
        _ => depth_bisection(&source.heralded_state()?, Feature::Qng),
    };
    Ok((clicks, report))
}

pub fn evaluate_point(parameter: SweepParameter, fixed: &SourceConfig, value: f64) -> Result<ProfilePoint> {
    let source = parameter.apply(fixed, value)?;
    let (clicks, report) = source_depth(&source)?;
    Ok(ProfilePoint {
        parameter_value: value,
        p1: clicks.p1,
        p2plus: clicks.p2plus,
        t_min: report.t_min,
        depth_db: report.depth_db(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub parameter: SweepParameter,
    pub best_value: f64,
    pub best_depth_db: f64,
    pub profile: Vec<ProfilePoint>,
    /// The best point is the first or last of the profile.
    pub boundary_flag: bool,
    /// A golden-section point was added to the profile.
    pub refined: bool,
}

fn best_index(profile: &[ProfilePoint]) -> usize {
    let mut best = 0;
    for (i, p) in profile.iter().enumerate() {
        if p.depth_db > profile[best].depth_db {
            best = i;
        }
    }
    best
}

fn summarize(parameter: SweepParameter, profile: Vec<ProfilePoint>, refined: bool) -> OptimizationResult {
    let i = best_index(&profile);
    OptimizationResult {
        parameter,
        best_value: profile[i].parameter_value,
        best_depth_db: profile[i].depth_db,
        boundary_flag: i == 0 || i + 1 == profile.len(),
        profile,
        refined,
    }
}

/// Depth profile over the grid, evaluated in parallel and assembled in grid
/// order. States without QNG get depth 0.
pub fn sweep(spec: &SweepSpec) -> Result<OptimizationResult> {
    spec.validate()?;
    let profile = spec
        .grid
        .par_iter()
        .map(|&v| evaluate_point(spec.parameter, &spec.fixed, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(spec.parameter, profile, false))
}

/// Golden-section maximisation of `f` on `[a, b]` down to a bracket of
/// relative width `rel_tol`.
pub fn golden_section_max<F>(mut a: f64, mut b: f64, rel_tol: f64, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a) > rel_tol * c.abs().max(d.abs()) && (b - a) > f64::EPSILON * b.abs() {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Refines an interior grid optimum between its neighbours. Boundary and
/// infinite optima are returned unchanged. The refined point joins the
/// profile only when it beats the grid optimum.
pub fn refine(result: &OptimizationResult, spec: &SweepSpec) -> Result<OptimizationResult> {
    if result.boundary_flag || result.profile.len() < 3 || !result.best_depth_db.is_finite() {
        return Ok(result.clone());
    }
    let i = best_index(&result.profile);
    let lo = result.profile[i - 1].parameter_value;
    let hi = result.profile[i + 1].parameter_value;
    let (x, _) = golden_section_max(lo, hi, REFINE_REL_TOL, |v| {
        Ok(evaluate_point(spec.parameter, &spec.fixed, v)?.depth_db)
    })?;
    let point = evaluate_point(spec.parameter, &spec.fixed, x)?;
    if !(point.depth_db > result.best_depth_db) {
        return Ok(result.clone());
    }
    let mut profile = result.profile.clone();
    let at = profile.partition_point(|p| p.parameter_value < x);
    profile.insert(at, point);
    Ok(summarize(result.parameter, profile, true))
}

/// Writes the profile as CSV with `inf` for infinite depth.
pub fn write_profile_csv<W: Write>(mut w: W, profile: &[ProfilePoint]) -> Result<()> {
    w.write_all(profile_csv(profile).as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn profile_csv(profile: &[ProfilePoint]) -> String {
    let mut s = String::new();
    s.push_str(PROFILE_CSV_HEADER);
    s.push('\n');
    for p in profile {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            p.parameter_value, p.p1, p.p2plus, p.t_min, p.depth_db
        );
    }
    s
}

/// Closed-form comparison of a CW and a pulsed SPDC source.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CwPulsedComparison {
    pub p1_cw: f64,
    pub p1_pulsed: f64,
    pub p2plus_cw: f64,
    pub p2plus_pulsed: f64,
    pub t_min_cw: f64,
    pub t_min_pulsed: f64,
    /// `t_min_cw / t_min_pulsed`.
    pub ratio: f64,
    /// Window times repetition rate, the predicted ratio.
    pub tau_nu: f64,
    /// `t_min` of the pulsed source with Poissonian (many-mode) pair
    /// statistics over `t_min` with thermal statistics of equal mean.
    pub mode_factor: f64,
    /// Thermal over Poissonian two-photon probability of the CW background
    /// count at its mean `r_bg * tau`.
    pub background_two_photon_ratio: f64,
    pub warning: Option<String>,
}

/// Pulsed source matched to `cw`: same window, efficiencies and jitter, gain
/// `r_bg / (eta_signal * nu)` so that both have the same mean pair number per
/// pulse period and, at low gain, the same `p1`.
pub fn matched_pulsed(cw: &SpdcConfig, rep_rate_hz: f64) -> Result<SpdcConfig> {
    let SpdcRegime::Cw { r_bg_hz, .. } = cw.regime else {
        return Err(Error::Usage("matched_pulsed needs a cw configuration".into()));
    };
    let eta = cw.effective_signal_efficiency();
    if !(eta > 0.0) {
        return Err(Error::Domain("signal efficiency must be > 0".into()));
    }
    let out = SpdcConfig {
        g: r_bg_hz / (eta * rep_rate_hz),
        regime: SpdcRegime::Pulsed { rep_rate_hz },
        mode_statistics: ModeStatistics::Thermal,
        ..*cw
    };
    out.validate()?;
    Ok(out)
}

pub fn compare_cw_pulsed(cw: &SpdcConfig, pulsed: &SpdcConfig) -> Result<CwPulsedComparison> {
    let (SpdcRegime::Cw { r_bg_hz, .. }, SpdcRegime::Pulsed { rep_rate_hz }) = (cw.regime, pulsed.regime)
    else {
        return Err(Error::Usage(
            "compare needs a cw and a pulsed SPDC configuration, in that order".into(),
        ));
    };
    let clicks = |c: &SpdcConfig| SourceConfig::Spdc(*c).reported_clicks();
    let (cw_p, pul_p) = (clicks(cw)?, clicks(pulsed)?);
    let t_cw = qng_depth_closed_form(&cw_p)?.t_min;
    let t_pul = qng_depth_closed_form(&pul_p)?.t_min;

    let swapped = SpdcConfig {
        mode_statistics: match pulsed.mode_statistics {
            ModeStatistics::Thermal => ModeStatistics::Poissonian,
            ModeStatistics::Poissonian => ModeStatistics::Thermal,
        },
        ..*pulsed
    };
    let t_swapped = qng_depth_closed_form(&clicks(&swapped)?)?.t_min;
    let mode_factor = match pulsed.mode_statistics {
        ModeStatistics::Thermal => t_swapped / t_pul,
        ModeStatistics::Poissonian => t_pul / t_swapped,
    };

    let mismatch = (cw_p.p1 - pul_p.p1).abs() / pul_p.p1;
    let warning = (mismatch > P1_MATCH_TOL).then(|| {
        format!(
            "sources are not matched: p1 differs by {:.2}% (cw {}, pulsed {})",
            100.0 * mismatch,
            cw_p.p1,
            pul_p.p1
        )
    });
    Ok(CwPulsedComparison {
        p1_cw: cw_p.p1,
        p1_pulsed: pul_p.p1,
        p2plus_cw: cw_p.p2plus,
        p2plus_pulsed: pul_p.p2plus,
        t_min_cw: t_cw,
        t_min_pulsed: t_pul,
        ratio: t_cw / t_pul,
        tau_nu: cw.tau_s * rep_rate_hz,
        mode_factor,
        background_two_photon_ratio: two_photon_ratio(r_bg_hz * cw.tau_s)?,
        warning,
    })
}

/// `P(n >= 2)` of a thermal count over that of a Poisson count, equal mean.
pub fn two_photon_ratio(mean: f64) -> Result<f64> {
    let thermal = background_counts(mean, ModeStatistics::Thermal)?.multiphoton();
    let poisson = background_counts(mean, ModeStatistics::Poissonian)?.multiphoton();
    if !(poisson > 0.0) {
        return Err(Error::Domain(format!(
            "two-photon ratio undefined at mean {mean}"
        )));
    }
    Ok(thermal / poisson)
}
