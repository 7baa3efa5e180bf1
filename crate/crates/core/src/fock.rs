//! Photon-number-diagonal states and the bosonic loss channel.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs whose total probability deviates from one by less than this are
/// renormalized silently; larger deviations are rejected.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Tail mass guaranteed for every model-generated distribution.
pub const TAIL_GUARANTEE: f64 = 1e-12;

/// Tail mass aimed for when the cap allows it. Going well below the guarantee
/// keeps `1 - P0` equal to the stored non-vacuum mass to rounding precision.
const TAIL_GOAL: f64 = 1e-18;

/// Default truncation cap for model-generated distributions.
pub const DEFAULT_CAP: usize = 64;

/// Binomial coefficients are evaluated through log-factorials above this `m`.
const EXACT_BINOMIAL_MAX: usize = 30;

/// Power transmittance of a passive attenuator, `0 <= T <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Transmittance(f64);

impl Transmittance {
    pub const ONE: Transmittance = Transmittance(1.0);
    pub const ZERO: Transmittance = Transmittance(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::Domain(format!(
                "transmittance must lie in [0, 1], got {value}"
            )));
        }
        Ok(Transmittance(value))
    }

    /// Converts a positive attenuation in dB, `T = 10^(-dB/10)`.
    pub fn from_db(attenuation_db: f64) -> Result<Self> {
        if attenuation_db.is_nan() || attenuation_db < 0.0 {
            return Err(Error::Domain(format!(
                "attenuation must be a nonnegative number of dB, got {attenuation_db}"
            )));
        }
        Ok(Transmittance(10f64.powf(-attenuation_db / 10.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Attenuation in positive dB; `+inf` for `T = 0`.
    pub fn to_db(self) -> f64 {
        -10.0 * self.0.log10()
    }
}

impl TryFrom<f64> for Transmittance {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Transmittance::new(value)
    }
}

impl From<Transmittance> for f64 {
    fn from(t: Transmittance) -> f64 {
        t.0
    }
}

impl fmt::Display for Transmittance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Fock-diagonal photon statistics `P_0 ..= P_nmax`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhotonNumberDistribution {
    probs: Vec<f64>,
}

impl PhotonNumberDistribution {
    /// Validates user-supplied probabilities.
    ///
    /// Every entry must lie in `[0, 1]`. A total within [`NORMALIZATION_TOL`]
    /// of one is renormalized; anything further off is an error.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("empty photon-number distribution".into()));
        }
        if let Some((n, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::Validation(format!("P_{n} = {p} is not a probability")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!(
                "probabilities sum to {total}, outside 1 ± {NORMALIZATION_TOL:e}"
            )));
        }
        let probs = if total == 1.0 {
            probs
        } else {
            probs.into_iter().map(|p| p / total).collect()
        };
        Ok(PhotonNumberDistribution { probs })
    }

    /// Internal constructor for values produced by exact model arithmetic.
    pub(crate) fn from_model(probs: Vec<f64>) -> Self {
        debug_assert!(!probs.is_empty());
        debug_assert!(probs.iter().all(|p| (0.0..=1.0 + 1e-15).contains(p)));
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= NORMALIZATION_TOL);
        PhotonNumberDistribution { probs }
    }

    pub fn vacuum() -> Self {
        PhotonNumberDistribution { probs: vec![1.0] }
    }

    /// The Fock state `|n><n|`.
    pub fn fock(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        PhotonNumberDistribution { probs }
    }

    /// `(1 - p)|0><0| + p|1><1|`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("Bernoulli probability {p} outside [0, 1]")));
        }
        Ok(PhotonNumberDistribution {
            probs: vec![1.0 - p, p],
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `P_n`, zero beyond the truncation order.
    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// Probability of two or more photons, summed directly so tiny values keep
    /// full relative precision.
    pub fn multiphoton(&self) -> f64 {
        self.probs.iter().skip(2).fold(0.0, |a, p| a + p)
    }

    /// Mass of the non-vacuum part, `sum_{n>=1} P_n`.
    pub(crate) fn non_vacuum(&self) -> f64 {
        self.probs.iter().skip(1).fold(0.0, |a, p| a + p)
    }

    /// Photon-number marginals `(P_0, P_1, P_2+)` with zero uncertainty.
    pub fn click_probabilities(&self) -> ClickProbabilities {
        ClickProbabilities::exact(self.get(0), self.get(1), self.multiphoton())
    }

    /// Binomial thinning by transmittance `t`:
    /// `P'_n = sum_{m>=n} C(m,n) t^n (1-t)^(m-n) P_m`.
    pub fn apply_loss(&self, t: Transmittance) -> Self {
        let t = t.value();
        if t == 1.0 {
            return self.clone();
        }
        if t == 0.0 {
            let mut probs = vec![0.0; self.probs.len()];
            probs[0] = self.total();
            return PhotonNumberDistribution { probs };
        }
        let loss = 1.0 - t;
        let n_max = self.n_max();
        let ln_fact = LnFactorials::up_to(n_max);
        let (ln_t, ln_loss) = (t.ln(), loss.ln());
        let mut out = vec![0.0; n_max + 1];
        for (m, &pm) in self.probs.iter().enumerate() {
            if pm == 0.0 {
                continue;
            }
            for (n, slot) in out.iter_mut().enumerate().take(m + 1) {
                let weight = if m <= EXACT_BINOMIAL_MAX {
                    binomial_exact(m, n) * t.powi(n as i32) * loss.powi((m - n) as i32)
                } else {
                    (ln_fact.ln_choose(m, n) + n as f64 * ln_t + (m - n) as f64 * ln_loss).exp()
                };
                *slot += weight * pm;
            }
        }
        PhotonNumberDistribution { probs: out }
    }

    /// Distribution of the sum of two independent photon numbers.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.probs.len() + other.probs.len() - 1];
        for (i, &a) in self.probs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.probs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PhotonNumberDistribution { probs: out }
    }
}

/// Poisson statistics with mean `mean`, adaptively truncated.
pub fn make_poisson(mean: f64) -> Result<PhotonNumberDistribution> {
    make_poisson_capped(mean, DEFAULT_CAP)
}

pub fn make_poisson_capped(mean: f64, cap: usize) -> Result<PhotonNumberDistribution> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::Domain(format!("Poisson mean must be >= 0, got {mean}")));
    }
    let mut probs = Vec::with_capacity(16);
    let mut term = (-mean).exp();
    probs.push(term);
    // Tail beyond n is bounded by P_n * mean / (n + 1 - mean) once n + 1 > mean.
    let tail_after = |n: usize, pn: f64| -> f64 {
        let denom = n as f64 + 1.0 - mean;
        if denom <= 0.0 {
            f64::INFINITY
        } else {
            pn * mean / denom
        }
    };
    let mut guaranteed_at = None;
    loop {
        let n = probs.len() - 1;
        let tail = tail_after(n, term);
        if tail < TAIL_GOAL {
            break;
        }
        if tail < TAIL_GUARANTEE && guaranteed_at.is_none() {
            guaranteed_at = Some(n);
        }
        if n >= cap {
            match guaranteed_at {
                Some(_) => break,
                None => {
                    return Err(Error::Truncation {
                        cap,
                        tail,
                        target: TAIL_GUARANTEE,
                    })
                }
            }
        }
        term *= mean / (n + 1) as f64;
        probs.push(term);
    }
    Ok(PhotonNumberDistribution::from_model(probs))
}

/// Geometric (single-mode thermal) statistics `P_n = (1-g) g^n`.
pub fn make_geometric(g: f64) -> Result<PhotonNumberDistribution> {
    make_geometric_capped(g, DEFAULT_CAP)
}

pub fn make_geometric_capped(g: f64, cap: usize) -> Result<PhotonNumberDistribution> {
    if !(0.0..1.0).contains(&g) {
        return Err(Error::Domain(format!("gain must lie in [0, 1), got {g}")));
    }
    let n_max = geometric_order(g, cap)?;
    let probs = (0..=n_max).map(|n| (1.0 - g) * g.powi(n as i32)).collect();
    Ok(PhotonNumberDistribution::from_model(probs))
}

/// Thermal statistics parameterized by the mean photon number.
pub fn make_thermal(mean: f64) -> Result<PhotonNumberDistribution> {
    if !(mean >= 0.0) || !mean.is_finite() {
        return Err(Error::Domain(format!("thermal mean must be >= 0, got {mean}")));
    }
    make_geometric(mean / (1.0 + mean))
}

/// Smallest order whose geometric tail `g^(n+1)` meets the truncation rule.
pub(crate) fn geometric_order(g: f64, cap: usize) -> Result<usize> {
    if g == 0.0 {
        return Ok(0);
    }
    let mut n = 0usize;
    let mut tail = g;
    let mut guaranteed_at = None;
    while tail >= TAIL_GOAL {
        if tail < TAIL_GUARANTEE && guaranteed_at.is_none() {
            guaranteed_at = Some(n);
        }
        if n >= cap {
            return match guaranteed_at {
                Some(_) => Ok(cap),
                None => Err(Error::Truncation {
                    cap,
                    tail,
                    target: TAIL_GUARANTEE,
                }),
            };
        }
        n += 1;
        tail *= g;
    }
    Ok(n)
}

fn binomial_exact(m: usize, n: usize) -> f64 {
    let k = n.min(m - n) as u64;
    let m = m as u64;
    let mut c: u64 = 1;
    for i in 0..k {
        c = c * (m - i) / (i + 1);
    }
    c as f64
}

struct LnFactorials(Vec<f64>);

impl LnFactorials {
    fn up_to(n: usize) -> Self {
        let mut v = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        v.push(0.0);
        for k in 1..=n {
            acc += (k as f64).ln();
            v.push(acc);
        }
        LnFactorials(v)
    }

    fn ln_choose(&self, m: usize, n: usize) -> f64 {
        self.0[m] - self.0[n] - self.0[m - n]
    }
}

/// Probabilities of zero, one and two-or-more events, with standard errors.
///
/// For a photon-number distribution these are `(P_0, P_1, P_2+)`; for
/// measured data they are per-trigger click probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickProbabilities {
    pub p0: f64,
    pub p1: f64,
    pub p2plus: f64,
    #[serde(default)]
    pub sigma_p0: f64,
    #[serde(default)]
    pub sigma_p1: f64,
    #[serde(default)]
    pub sigma_p2plus: f64,
}

impl ClickProbabilities {
    pub(crate) fn exact(p0: f64, p1: f64, p2plus: f64) -> Self {
        ClickProbabilities {
            p0,
            p1,
            p2plus,
            sigma_p0: 0.0,
            sigma_p1: 0.0,
            sigma_p2plus: 0.0,
        }
    }

    /// Builds `(1 - p1 - p2plus, p1, p2plus)` after range checks.
    pub fn from_p1_p2plus(p1: f64, p2plus: f64) -> Result<Self> {
        for (name, v) in [("p1", p1), ("p2plus", p2plus)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!("{name} = {v} is not a probability")));
            }
        }
        let p0 = 1.0 - p1 - p2plus;
        if p0 < -NORMALIZATION_TOL {
            return Err(Error::Validation(format!(
                "p1 + p2plus = {} exceeds one",
                p1 + p2plus
            )));
        }
        Ok(ClickProbabilities::exact(p0.max(0.0), p1, p2plus))
    }

    pub fn validate(&self) -> Result<()> {
        let values = [self.p0, self.p1, self.p2plus];
        if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Validation(format!(
                "click probabilities {values:?} out of range"
            )));
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Validation(format!(
                "click probabilities sum to {total}"
            )));
        }
        if [self.sigma_p0, self.sigma_p1, self.sigma_p2plus]
            .iter()
            .any(|s| !(*s >= 0.0))
        {
            return Err(Error::Validation("negative standard error".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: f64) -> Transmittance {
        Transmittance::new(v).unwrap()
    }

    #[test]
    fn single_photon_thinning() {
        let d = PhotonNumberDistribution::fock(1).apply_loss(t(0.4));
        assert!((d.get(0) - 0.6).abs() < 1e-15);
        assert!((d.get(1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn two_photon_symmetric_binomial() {
        let d = PhotonNumberDistribution::fock(2).apply_loss(t(0.5));
        assert_eq!(d.probs(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn thinned_geometric_matches_generating_function() {
        // Thinning a geometric law gives P'_n = (1-g)/(1-g+gT) r^n, r = gT/(1-g+gT).
        let (g, tr) = (0.1, 0.3);
        let d = make_geometric(g).unwrap().apply_loss(t(tr));
        let head = (1.0 - g) / (1.0 - g + g * tr);
        let r = g * tr / (1.0 - g + g * tr);
        for n in 0..=d.n_max() {
            let expected = head * r.powi(n as i32);
            assert!((d.get(n) - expected).abs() <= 1e-12, "n = {n}");
        }
    }

    #[test]
    fn log_binomial_branch_matches_exact() {
        // m = 40 goes through the log-factorial path.
        let d = PhotonNumberDistribution::fock(40).apply_loss(t(0.5));
        let mut pascal = vec![1.0f64];
        for _ in 0..40 {
            let mut next = vec![1.0; pascal.len() + 1];
            for k in 1..pascal.len() {
                next[k] = pascal[k - 1] + pascal[k];
            }
            pascal = next;
        }
        for (n, c) in pascal.iter().enumerate() {
            let expected = c * 0.5f64.powi(40);
            assert!((d.get(n) - expected).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn poisson_examples() {
        assert_eq!(make_poisson(0.0).unwrap().probs(), &[1.0]);
        let p = make_poisson(1.0).unwrap();
        let e_inv = (-1.0f64).exp();
        assert!((p.get(0) - e_inv).abs() < 1e-15);
        assert!((p.get(1) - e_inv).abs() < 1e-15);
        let c = p.click_probabilities();
        assert!((c.p2plus - (1.0 - 2.0 * e_inv)).abs() < 1e-12);
        let p5 = make_poisson(5.0).unwrap();
        assert!((p5.total() - 1.0).abs() < 1e-12);
        assert!(p5.n_max() <= DEFAULT_CAP);
    }

    #[test]
    fn poisson_rejects_negative_mean() {
        assert!(matches!(make_poisson(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn poisson_cap_too_small() {
        assert!(matches!(
            make_poisson_capped(40.0, 20),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn geometric_examples() {
        assert_eq!(make_geometric(0.0).unwrap().probs(), &[1.0]);
        let d = make_geometric(0.01).unwrap();
        assert!((d.get(1) - 0.0099).abs() < 1e-15);
        assert!((d.get(2) - 9.9e-5).abs() < 1e-17);
        let half = make_geometric(0.5).unwrap();
        assert!((half.mean_photon_number() - 1.0).abs() < 1e-12);
        assert!(matches!(make_geometric(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn geometric_near_one_exceeds_cap() {
        assert!(matches!(make_geometric(0.9), Err(Error::Truncation { .. })));
    }

    #[test]
    fn moments_and_marginals() {
        assert_eq!(PhotonNumberDistribution::fock(1).mean_photon_number(), 1.0);
        let v = PhotonNumberDistribution::vacuum().click_probabilities();
        assert_eq!((v.p0, v.p1, v.p2plus), (1.0, 0.0, 0.0));
    }

    #[test]
    fn validation_renormalizes_rounding_only() {
        let d = PhotonNumberDistribution::new(vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-15);
        assert!(matches!(
            PhotonNumberDistribution::new(vec![0.5, 0.49]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            PhotonNumberDistribution::new(vec![1.1, -0.1]),
            Err(Error::Validation(_))
        ));
        assert!(PhotonNumberDistribution::new(vec![]).is_err());
    }

    #[test]
    fn transmittance_domain() {
        assert!(matches!(Transmittance::new(1.2), Err(Error::Domain(_))));
        assert!(matches!(Transmittance::new(-0.1), Err(Error::Domain(_))));
        assert!((Transmittance::from_db(10.0).unwrap().value() - 0.1).abs() < 1e-15);
        assert!((t(0.01).to_db() - 20.0).abs() < 1e-12);
    }

    #[test]
    fn loss_endpoints() {
        let d = make_poisson(0.7).unwrap();
        assert_eq!(d.apply_loss(Transmittance::ONE), d);
        let v = d.apply_loss(Transmittance::ZERO);
        assert!((v.get(0) - 1.0).abs() < 1e-12);
        assert!(v.probs()[1..].iter().all(|&p| p == 0.0));
    }

    #[test]
    fn convolution_of_bernoullis() {
        let a = PhotonNumberDistribution::bernoulli(0.5).unwrap();
        assert_eq!(a.convolve(&a).probs(), &[0.25, 0.5, 0.25]);
    }
}
