//! Nonclassicality and quantum non-Gaussianity witnesses, and the depth of
//! each feature under attenuation.
//!
//! All borders are strict: a state sitting exactly on a border is classified
//! outside the witnessed set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{ClickProbabilities, PhotonNumberDistribution, Transmittance};

/// Relative slack on the exact NC border. Coherent states sit on the border
/// analytically; rounding must not push them inside.
const NC_EXACT_REL_TOL: f64 = 1e-12;

/// Ratio `p2+/p1` above which the cubic QNG approximation is flagged.
pub const APPROXIMATION_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    /// Nonclassicality, judged by the exact criterion `P1 > -P0 ln P0`.
    Nc,
    /// Quantum non-Gaussianity, judged by `p2+ < 2/3 p1^3`.
    Qng,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMethod {
    ClosedForm,
    Bisection,
}

/// Innermost set of the NC ⊃ QNG ⊃ Wigner-negative hierarchy a state is
/// witnessed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    WignerNegativeCandidate,
    QuantumNonGaussian,
    Nonclassical,
    NotWitnessed,
}

/// Signed distances to each border; positive means inside the witnessed set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// `P1 + P0 ln P0`
    pub nc_exact: f64,
    /// `p1^2 / 2 - p2+`
    pub nc_approx: f64,
    /// `2 p1^3 / 3 - p2+`
    pub qng_approx: f64,
    /// `2 p1 - 1`, positive when `(2 p1)^-1 < 1`.
    pub wigner: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessVerdict {
    pub nc_exact: bool,
    pub nc_approx: bool,
    pub qng_approx: bool,
    pub wigner_negative_possible: bool,
    pub margins: Margins,
    pub classification: Classification,
}

/// Outcome of a depth computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Depth {
    Finite { db: f64 },
    /// The witness held at every scanned attenuation and its normalized
    /// margin did not shrink over the last decade of the scan.
    Infinite { verified_to_db: f64 },
    /// The witness held to the scan floor but its margin is still shrinking,
    /// so only a lower bound is known.
    BeyondScan { verified_to_db: f64 },
    /// The witness does not hold for the unattenuated state.
    NotWitnessed,
}

impl Depth {
    /// Depth in dB: `+inf` for the infinite sentinel, the scan floor for a
    /// lower bound, zero when the feature is not witnessed.
    pub fn db(&self) -> f64 {
        match *self {
            Depth::Finite { db } => db,
            Depth::Infinite { .. } => f64::INFINITY,
            Depth::BeyondScan { verified_to_db } => verified_to_db,
            Depth::NotWitnessed => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub feature: Feature,
    pub method: DepthMethod,
    /// Minimal transmittance keeping the witness; 0 for infinite depth. The
    /// closed form may report values above one for states that are not QNG.
    pub t_min: f64,
    pub depth: Depth,
    pub fiber_km: Option<f64>,
    /// `p2+/p1` exceeded [`APPROXIMATION_LIMIT`] (closed form only).
    pub approximation_stretched: bool,
    /// The scan found the witness holding again after a failure.
    pub non_monotonic: bool,
}

impl DepthReport {
    pub fn depth_db(&self) -> f64 {
        self.depth.db()
    }

    pub fn is_witnessed(&self) -> bool {
        !matches!(self.depth, Depth::NotWitnessed)
    }

    /// Attaches the fiber length equivalent to this depth.
    pub fn with_fiber(mut self, loss_db_per_km: f64) -> Result<Self> {
        self.fiber_km = Some(fiber_range(self.depth_db(), loss_db_per_km)?);
        Ok(self)
    }

    fn not_witnessed(feature: Feature, method: DepthMethod, t_min: f64) -> Self {
        DepthReport {
            feature,
            method,
            t_min,
            depth: Depth::NotWitnessed,
            fiber_km: None,
            approximation_stretched: false,
            non_monotonic: false,
        }
    }
}

fn nc_exact_margin_parts(p0: f64, p1: f64, non_vacuum: f64) -> (f64, f64) {
    if p0 <= 0.0 {
        return (p1, 0.0);
    }
    // ln P0 from the non-vacuum mass keeps precision when P0 is close to one.
    let ln_p0 = if p0 > 0.5 {
        (-non_vacuum).ln_1p()
    } else {
        p0.ln()
    };
    let bound = -p0 * ln_p0;
    (p1 - bound, bound)
}

fn nc_exact_parts(p0: f64, p1: f64, non_vacuum: f64) -> bool {
    let (margin, bound) = nc_exact_margin_parts(p0, p1, non_vacuum);
    margin > NC_EXACT_REL_TOL * bound
}

/// Exact NC criterion `P1 > -P0 ln P0`.
pub fn nc_exact(dist: &PhotonNumberDistribution) -> bool {
    nc_exact_parts(dist.get(0), dist.get(1), dist.non_vacuum())
}

pub fn nc_exact_clicks(p: &ClickProbabilities) -> bool {
    nc_exact_parts(p.p0, p.p1, p.p1 + p.p2plus)
}

/// `P1 + P0 ln P0`; zero on the coherent-state border.
pub fn nc_exact_margin(dist: &PhotonNumberDistribution) -> f64 {
    nc_exact_margin_parts(dist.get(0), dist.get(1), dist.non_vacuum()).0
}

pub fn nc_approx(p: &ClickProbabilities) -> bool {
    p.p2plus < 0.5 * p.p1 * p.p1
}

pub fn qng_approx(p: &ClickProbabilities) -> bool {
    p.p2plus < qng_bound(p.p1)
}

fn qng_bound(p1: f64) -> f64 {
    2.0 / 3.0 * p1 * p1 * p1
}

fn verdict(p: &ClickProbabilities, nc_exact: bool, nc_exact_margin: f64) -> WitnessVerdict {
    let nc_approx = nc_approx(p);
    let qng_approx = qng_approx(p);
    let wigner = 2.0 * p.p1 > 1.0;
    let classification = if qng_approx && wigner {
        Classification::WignerNegativeCandidate
    } else if qng_approx {
        Classification::QuantumNonGaussian
    } else if nc_exact || nc_approx {
        Classification::Nonclassical
    } else {
        Classification::NotWitnessed
    };
    WitnessVerdict {
        nc_exact,
        nc_approx,
        qng_approx,
        wigner_negative_possible: wigner,
        margins: Margins {
            nc_exact: nc_exact_margin,
            nc_approx: 0.5 * p.p1 * p.p1 - p.p2plus,
            qng_approx: qng_bound(p.p1) - p.p2plus,
            wigner: 2.0 * p.p1 - 1.0,
        },
        classification,
    }
}

pub fn evaluate(dist: &PhotonNumberDistribution) -> WitnessVerdict {
    verdict(
        &dist.click_probabilities(),
        nc_exact(dist),
        nc_exact_margin(dist),
    )
}

pub fn evaluate_clicks(p: &ClickProbabilities) -> WitnessVerdict {
    let margin = nc_exact_margin_parts(p.p0, p.p1, p.p1 + p.p2plus).0;
    verdict(p, nc_exact_clicks(p), margin)
}

/// Transmittance above which Wigner negativity is possible, `(2 p1)^-1`,
/// valid for `P2+ << P1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerThreshold {
    pub threshold: f64,
    /// False when the threshold is at or above one: no attenuator setting
    /// can reach negativity.
    pub attainable: bool,
}

impl WignerThreshold {
    pub fn transmittance(&self) -> Option<Transmittance> {
        if self.attainable {
            Transmittance::new(self.threshold).ok()
        } else {
            None
        }
    }
}

pub fn wigner_negativity_threshold(p1: f64) -> Result<WignerThreshold> {
    if !(p1 > 0.0 && p1 <= 1.0) {
        return Err(Error::Domain(format!(
            "Wigner threshold needs 0 < p1 <= 1, got {p1}"
        )));
    }
    Ok(WignerThreshold {
        threshold: 1.0 / (2.0 * p1),
        attainable: 2.0 * p1 > 1.0,
    })
}

/// QNG depth from `T_min = 3/2 p2+ / p1^3`.
pub fn qng_depth_closed_form(p: &ClickProbabilities) -> Result<DepthReport> {
    if !(p.p1 > 0.0) {
        return Err(Error::Domain(format!(
            "closed-form depth needs p1 > 0, got {}",
            p.p1
        )));
    }
    let t_min = 1.5 * p.p2plus / (p.p1 * p.p1 * p.p1);
    let stretched = p.p2plus / p.p1 > APPROXIMATION_LIMIT;
    // The verdict, not the rounded ratio, decides witnessing so the two
    // never disagree at the border.
    let mut report = if qng_approx(p) {
        DepthReport {
            feature: Feature::Qng,
            method: DepthMethod::ClosedForm,
            t_min,
            depth: if t_min == 0.0 {
                Depth::Infinite {
                    verified_to_db: f64::INFINITY,
                }
            } else {
                Depth::Finite {
                    db: (-10.0 * t_min.log10()).max(0.0),
                }
            },
            fiber_km: None,
            approximation_stretched: false,
            non_monotonic: false,
        }
    } else {
        DepthReport::not_witnessed(Feature::Qng, DepthMethod::ClosedForm, t_min)
    };
    report.approximation_stretched = stretched;
    Ok(report)
}

/// Attenuation grid and bisection tolerance used by [`depth_bisection_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanSettings {
    pub max_db: f64,
    pub step_db: f64,
    pub tol_db: f64,
    /// Width of the final stretch over which the normalized margin must not
    /// shrink for an infinite-depth verdict.
    pub tail_window_db: f64,
    /// Allowed drop of the normalized margin below its running maximum
    /// inside that stretch.
    pub margin_slack: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            max_db: 60.0,
            step_db: 0.1,
            tol_db: 1e-9,
            tail_window_db: 10.0,
            margin_slack: 1e-6,
        }
    }
}

fn witness_holds(feature: Feature, dist: &PhotonNumberDistribution) -> bool {
    match feature {
        Feature::Nc => nc_exact(dist),
        Feature::Qng => qng_approx(&dist.click_probabilities()),
    }
}

/// Margin divided by `p1^k`, `k` being the order of the border, so that it
/// stays O(1) along an attenuation trajectory.
fn normalized_margin(feature: Feature, dist: &PhotonNumberDistribution) -> f64 {
    let p1 = dist.get(1);
    if p1 <= 0.0 {
        return f64::NEG_INFINITY;
    }
    match feature {
        Feature::Nc => nc_exact_margin(dist) / (p1 * p1),
        Feature::Qng => (qng_bound(p1) - dist.multiphoton()) / (p1 * p1 * p1),
    }
}

fn attenuate(dist: &PhotonNumberDistribution, db: f64) -> PhotonNumberDistribution {
    dist.apply_loss(Transmittance::from_db(db).expect("scan attenuation is nonnegative"))
}

/// True when the normalized margin drops by a contracting amount per tail
/// window and the geometric extrapolation of those drops stays positive.
fn margin_converges(feature: Feature, dist: &PhotonNumberDistribution, settings: &ScanSettings) -> bool {
    let w = settings.tail_window_db;
    if settings.max_db < 2.0 * w {
        return false;
    }
    let m = |db: f64| normalized_margin(feature, &attenuate(dist, db));
    let (a, b, c) = (m(settings.max_db - 2.0 * w), m(settings.max_db - w), m(settings.max_db));
    let (d1, d2) = (a - b, b - c);
    if !(d1 > 0.0 && d2 >= 0.0 && d2 < 0.5 * d1) {
        return false;
    }
    let r = d2 / d1;
    c - d2 * r / (1.0 - r) > 0.0
}

/// Depth under the exact loss channel with the default scan (0 to 60 dB in
/// 0.1 dB steps).
pub fn depth_bisection(dist: &PhotonNumberDistribution, feature: Feature) -> DepthReport {
    depth_bisection_with(dist, feature, &ScanSettings::default())
}

pub fn depth_bisection_with(
    dist: &PhotonNumberDistribution,
    feature: Feature,
    settings: &ScanSettings,
) -> DepthReport {
    if !witness_holds(feature, dist) {
        return DepthReport::not_witnessed(feature, DepthMethod::Bisection, 1.0);
    }
    let steps = (settings.max_db / settings.step_db).round() as usize;
    let grid = |i: usize| i as f64 * settings.step_db;

    let mut first_failure = None;
    let mut non_monotonic = false;
    for i in 1..=steps {
        let holds = witness_holds(feature, &attenuate(dist, grid(i)));
        match (first_failure, holds) {
            (None, false) => first_failure = Some(i),
            (Some(_), true) => {
                non_monotonic = true;
                break;
            }
            _ => {}
        }
    }

    let Some(fail) = first_failure else {
        let tail_start = ((settings.max_db - settings.tail_window_db) / settings.step_db)
            .round()
            .max(0.0) as usize;
        let margins: Vec<f64> = (tail_start..=steps)
            .map(|i| normalized_margin(feature, &attenuate(dist, grid(i))))
            .collect();
        let mut best = f64::NEG_INFINITY;
        let shrinking = margins.iter().any(|&m| {
            best = best.max(m);
            m < best - settings.margin_slack
        }) && !margin_converges(feature, dist, settings);
        let depth = if shrinking {
            Depth::BeyondScan {
                verified_to_db: settings.max_db,
            }
        } else {
            Depth::Infinite {
                verified_to_db: settings.max_db,
            }
        };
        let t_min = if shrinking {
            10f64.powf(-settings.max_db / 10.0)
        } else {
            0.0
        };
        return DepthReport {
            feature,
            method: DepthMethod::Bisection,
            t_min,
            depth,
            fiber_km: None,
            approximation_stretched: false,
            non_monotonic: false,
        };
    };

    let (mut lo, mut hi) = (grid(fail - 1), grid(fail));
    while hi - lo > settings.tol_db {
        let mid = 0.5 * (lo + hi);
        if witness_holds(feature, &attenuate(dist, mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    DepthReport {
        feature,
        method: DepthMethod::Bisection,
        t_min: 10f64.powf(-lo / 10.0),
        depth: Depth::Finite { db: lo },
        fiber_km: None,
        approximation_stretched: false,
        non_monotonic,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub attenuation_db: f64,
    pub transmittance: f64,
    pub p1: f64,
    pub p2plus: f64,
}

/// `(p1, p2+)` of the attenuated state at each requested attenuation.
pub fn attenuation_trajectory(
    dist: &PhotonNumberDistribution,
    attenuations_db: &[f64],
) -> Result<Vec<TrajectoryPoint>> {
    attenuations_db
        .iter()
        .map(|&db| {
            let t = Transmittance::from_db(db)?;
            let c = dist.apply_loss(t).click_probabilities();
            Ok(TrajectoryPoint {
                attenuation_db: db,
                transmittance: t.value(),
                p1: c.p1,
                p2plus: c.p2plus,
            })
        })
        .collect()
}

/// Fiber length with the same loss as `depth_db`.
pub fn fiber_range(depth_db: f64, loss_db_per_km: f64) -> Result<f64> {
    if !(loss_db_per_km > 0.0) {
        return Err(Error::Domain(format!(
            "fiber loss must be positive, got {loss_db_per_km} dB/km"
        )));
    }
    if !(depth_db >= 0.0) {
        return Err(Error::Domain(format!(
            "depth must be nonnegative, got {depth_db} dB"
        )));
    }
    Ok(depth_db / loss_db_per_km)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::make_poisson;

    fn clicks(p1: f64, p2plus: f64) -> ClickProbabilities {
        ClickProbabilities::from_p1_p2plus(p1, p2plus).unwrap()
    }

    #[test]
    fn coherent_state_is_marginal() {
        let d = make_poisson(0.5).unwrap();
        assert!(!nc_exact(&d));
        assert!(nc_exact_margin(&d).abs() < 1e-12);
    }

    #[test]
    fn nc_exact_examples() {
        let d = PhotonNumberDistribution::new(vec![0.9, 0.1]).unwrap();
        assert!(nc_exact(&d));
        assert!((-(0.9f64) * 0.9f64.ln() - 0.094_824_5).abs() < 1e-7);
        assert!(!nc_exact(&PhotonNumberDistribution::vacuum()));
        // P0 = 0: the bound vanishes.
        assert!(nc_exact(&PhotonNumberDistribution::fock(1)));
        assert!(!nc_exact(&PhotonNumberDistribution::fock(2)));
    }

    #[test]
    fn approximate_borders() {
        let a = clicks(0.1, 1e-4);
        assert!(nc_approx(&a) && qng_approx(&a));
        let b = clicks(0.1, 1e-3);
        assert!(nc_approx(&b) && !qng_approx(&b));
        let c = clicks(0.0, 0.0);
        assert!(!nc_approx(&c) && !qng_approx(&c));
    }

    #[test]
    fn wigner_threshold_examples() {
        let ideal = wigner_negativity_threshold(1.0).unwrap();
        assert_eq!(ideal.threshold, 0.5);
        assert!(ideal.attainable);
        let edge = wigner_negativity_threshold(0.5).unwrap();
        assert_eq!(edge.threshold, 1.0);
        assert!(!edge.attainable);
        let weak = wigner_negativity_threshold(0.1).unwrap();
        assert!((weak.threshold - 5.0).abs() < 1e-12);
        assert!(!weak.attainable && weak.transmittance().is_none());
        assert!(matches!(wigner_negativity_threshold(0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_examples() {
        let r = qng_depth_closed_form(&clicks(0.1, 1e-5)).unwrap();
        assert!((r.t_min - 0.015).abs() < 1e-15);
        assert!((r.depth_db() - 18.239).abs() < 1e-3);

        let p1 = 0.26;
        let border = qng_depth_closed_form(&clicks(p1, 2.0 / 3.0 * p1 * p1 * p1)).unwrap();
        assert!((border.t_min - 1.0).abs() < 1e-12);
        assert!(border.depth_db().abs() < 1e-12);

        let not_qng = qng_depth_closed_form(&clicks(0.1, 1e-3)).unwrap();
        assert_eq!(not_qng.depth, Depth::NotWitnessed);
        assert!(not_qng.t_min > 1.0);

        assert!(matches!(
            qng_depth_closed_form(&clicks(0.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn closed_form_flags_stretched_approximation() {
        let r = qng_depth_closed_form(&clicks(0.9, 0.095)).unwrap();
        assert!(r.approximation_stretched);
        let ok = qng_depth_closed_form(&clicks(0.1, 1e-5)).unwrap();
        assert!(!ok.approximation_stretched);
    }

    #[test]
    fn published_depth_inverse() {
        let t_min = 10f64.powf(-3.18);
        assert!((t_min - 6.61e-4).abs() < 1e-6);
    }

    #[test]
    fn ideal_state_has_infinite_depth() {
        let d = PhotonNumberDistribution::bernoulli(0.6).unwrap();
        for feature in [Feature::Nc, Feature::Qng] {
            let r = depth_bisection(&d, feature);
            assert_eq!(
                r.depth,
                Depth::Infinite {
                    verified_to_db: 60.0
                },
                "{feature:?}"
            );
            assert_eq!(r.t_min, 0.0);
        }
    }

    #[test]
    fn bisection_agrees_with_closed_form_in_deep_regime() {
        let d = PhotonNumberDistribution::new(vec![0.99, 0.01 - 1e-8, 1e-8]).unwrap();
        let exact = depth_bisection(&d, Feature::Qng);
        let approx = qng_depth_closed_form(&d.click_probabilities()).unwrap();
        let rel = (exact.depth_db() - approx.depth_db()).abs() / approx.depth_db();
        assert!(rel < 0.01, "{} vs {}", exact.depth_db(), approx.depth_db());
        assert!(exact.depth_db() >= approx.depth_db());
    }

    #[test]
    fn bisection_not_applicable_when_witness_fails() {
        let thermal = crate::fock::make_geometric(0.2).unwrap();
        let r = depth_bisection(&thermal, Feature::Qng);
        assert_eq!(r.depth, Depth::NotWitnessed);
        assert_eq!(r.depth_db(), 0.0);
    }

    #[test]
    fn converging_margin_counts_as_infinite() {
        // Normalized NC margin of a single photon is 1/2 + x/6 under loss.
        let d = PhotonNumberDistribution::bernoulli(1.0).unwrap();
        let r = depth_bisection(&d, Feature::Nc);
        assert!(matches!(r.depth, Depth::Infinite { .. }), "{:?}", r.depth);
    }

    #[test]
    fn slowly_shrinking_margin_is_only_a_lower_bound() {
        // QNG to beyond 60 dB, but p2+ > 0 makes the margin shrink.
        let d = PhotonNumberDistribution::new(vec![0.5, 0.5 - 1e-12, 1e-12]).unwrap();
        let r = depth_bisection(&d, Feature::Qng);
        assert_eq!(
            r.depth,
            Depth::BeyondScan {
                verified_to_db: 60.0
            }
        );
    }

    #[test]
    fn trajectory_identity_and_monotone() {
        let d = PhotonNumberDistribution::new(vec![0.7, 0.28, 0.02]).unwrap();
        let tr = attenuation_trajectory(&d, &[0.0, 3.0, 6.0, 9.0]).unwrap();
        assert_eq!((tr[0].p1, tr[0].p2plus), (0.28, 0.02));
        for w in tr.windows(2) {
            assert!(w[1].p1 < w[0].p1 && w[1].p2plus < w[0].p2plus);
        }
        let ideal = PhotonNumberDistribution::bernoulli(0.4).unwrap();
        let tr = attenuation_trajectory(&ideal, &[0.0, 10.0, 40.0]).unwrap();
        assert!(tr.iter().all(|p| p.p2plus == 0.0));
    }

    #[test]
    fn fiber_examples() {
        assert!((fiber_range(31.8, 4.0).unwrap() - 7.95).abs() < 1e-12);
        assert!((fiber_range(31.8, 0.177).unwrap() - 179.66).abs() < 0.01);
        assert_eq!(fiber_range(0.0, 4.0).unwrap(), 0.0);
        assert!(matches!(fiber_range(10.0, 0.0), Err(Error::Domain(_))));
        assert!(fiber_range(f64::INFINITY, 4.0).unwrap().is_infinite());
    }

    #[test]
    fn verdict_classification() {
        let v = evaluate_clicks(&clicks(0.1, 1e-4));
        assert_eq!(v.classification, Classification::QuantumNonGaussian);
        assert!(v.margins.qng_approx > 0.0 && v.margins.wigner < 0.0);
        let v = evaluate_clicks(&clicks(0.1, 1e-3));
        assert_eq!(v.classification, Classification::Nonclassical);
        let v = evaluate(&PhotonNumberDistribution::bernoulli(0.8).unwrap());
        assert_eq!(v.classification, Classification::WignerNegativeCandidate);
        let v = evaluate(&make_poisson(1.0).unwrap());
        assert_eq!(v.classification, Classification::NotWitnessed);
    }
}
