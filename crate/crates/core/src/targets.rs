//! Response models, running estimators and target allocation policies.
//!
//! A [`TargetPolicy`] turns the current parameter estimates of both arms into
//! the pair of thresholds `(rho1, rho2)` that gate reinforcement of the urn:
//! `rho1 = p * eta + (1 - p)` and `rho2 = p * eta`, each clamped into
//! `[clamp_eps, 1 - clamp_eps]`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::rng::RandomStream;
use crate::scalar::Scalar;
use crate::urn::{Color, UtilityKind, UtilitySpec};

/// Denominators below this are treated as degenerate.
pub const ETA_TOLERANCE: f64 = 1e-9;
/// Lower bound applied to variance estimates.
pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Bernoulli,
    Gaussian,
}

impl ModelKind {
    /// Default utility: affine on `[0.1, 1]` for Bernoulli responses, a
    /// clamp to `[0.1, 20]` for Gaussian ones.
    pub fn default_utility<F: Scalar>(self) -> UtilitySpec<F> {
        let spec = match self {
            ModelKind::Bernoulli => UtilitySpec::new(UtilityKind::Affine, F::lit(0.1), F::one()),
            ModelKind::Gaussian => UtilitySpec::new(UtilityKind::Clamp, F::lit(0.1), F::lit(20.0)),
        };
        spec.expect("default utilities are valid")
    }
}

/// Distribution of one arm's responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ResponseModel<F> {
    Bernoulli { p: F },
    Gaussian { mean: F, variance: F },
}

impl<F: Scalar> ResponseModel<F> {
    pub fn bernoulli(p: F) -> Result<Self> {
        if !(p >= F::zero() && p <= F::one()) {
            return Err(UrnError::Config(format!("Bernoulli p must lie in [0, 1], got {p}")));
        }
        Ok(Self::Bernoulli { p })
    }

    pub fn gaussian(mean: F, variance: F) -> Result<Self> {
        if !mean.is_finite() {
            return Err(UrnError::Config(format!("Gaussian mean must be finite, got {mean}")));
        }
        if !(variance > F::zero() && variance.is_finite()) {
            return Err(UrnError::Config(format!(
                "Gaussian variance must be positive, got {variance}"
            )));
        }
        Ok(Self::Gaussian { mean, variance })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Bernoulli { .. } => ModelKind::Bernoulli,
            Self::Gaussian { .. } => ModelKind::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Bernoulli { p } => Self::bernoulli(p).map(|_| ()),
            Self::Gaussian { mean, variance } => Self::gaussian(mean, variance).map(|_| ()),
        }
    }

    /// Draws one response. Bernoulli consumes one uniform (`1` iff `u < p`);
    /// Gaussian consumes one standard normal from the stream.
    pub fn sample<R: RandomStream + ?Sized>(&self, rng: &mut R) -> F {
        match *self {
            Self::Bernoulli { p } => {
                if rng.uniform() < p.as_f64() {
                    F::one()
                } else {
                    F::zero()
                }
            }
            Self::Gaussian { mean, variance } => {
                mean + variance.sqrt() * F::lit(rng.standard_normal())
            }
        }
    }

    /// Mean reinforcement `E[u(xi)]` under the given utility.
    pub fn mean_reinforcement(&self, utility: &UtilitySpec<F>) -> f64 {
        let (a, b) = (utility.a().as_f64(), utility.b().as_f64());
        match (*self, utility.kind()) {
            (Self::Bernoulli { p }, UtilityKind::Affine) => a + (b - a) * p.as_f64(),
            (Self::Bernoulli { p }, UtilityKind::Clamp) => {
                let p = p.as_f64();
                p * 1f64.clamp(a, b) + (1.0 - p) * 0f64.clamp(a, b)
            }
            (Self::Gaussian { mean, variance }, UtilityKind::Clamp) => {
                clamped_normal_mean(mean.as_f64(), variance.as_f64().sqrt(), a, b)
            }
            // Affine only has a closed form on [0, 1] inputs; a Gaussian
            // passed through it is clipped to [0, 1] first.
            (Self::Gaussian { mean, variance }, UtilityKind::Affine) => {
                let clipped = clamped_normal_mean(mean.as_f64(), variance.as_f64().sqrt(), 0.0, 1.0);
                a + (b - a) * clipped
            }
        }
    }

    /// Target parameters as seen by the estimators.
    pub fn true_params(&self) -> ArmParams<F> {
        match *self {
            Self::Bernoulli { p } => ArmParams { mean: p, variance: p * (F::one() - p), fallback: false },
            Self::Gaussian { mean, variance } => ArmParams { mean, variance, fallback: false },
        }
    }
}

/// `E[min(max(X, a), b)]` for `X ~ N(m, s^2)`.
fn clamped_normal_mean(m: f64, s: f64, a: f64, b: f64) -> f64 {
    use crate::diagnostics::normal::{standard_normal_cdf as cdf, standard_normal_pdf as pdf};
    let alpha = (a - m) / s;
    let beta = (b - m) / s;
    a * cdf(alpha) + b * (1.0 - cdf(beta)) + m * (cdf(beta) - cdf(alpha)) + s * (pdf(alpha) - pdf(beta))
}

/// Running sufficient statistics of one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmStats<F> {
    pub count: u64,
    pub sum: F,
    pub sum_sq: F,
}

/// Sufficient statistics of both arms, indexed by [`Color`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmEstimates<F> {
    pub arms: [ArmStats<F>; 2],
}

impl<F: Scalar> ArmEstimates<F> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one observed response into the allocated arm.
    pub fn update(&mut self, arm: Color, response: F) {
        let s = &mut self.arms[arm.index()];
        s.count += 1;
        s.sum = s.sum + response;
        s.sum_sq = s.sum_sq + response * response;
    }

    pub fn arm(&self, arm: Color) -> &ArmStats<F> {
        &self.arms[arm.index()]
    }
}

/// Point estimates for one arm. For Bernoulli arms `mean` is `p_hat`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmParams<F> {
    pub mean: F,
    pub variance: F,
    /// Set when any component came from a policy fallback.
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum EtaKind<F> {
    /// `(1 - p1) / (2 - p1 - p2)`
    Wei,
    /// `sqrt(p1) / (sqrt(p1) + sqrt(p2))`
    RosenbergerSqrt,
    /// `sigma1 / (sigma1 + sigma2)`
    Neyman,
    /// `sigma1 sqrt(m2) / (sigma1 sqrt(m2) + sigma2 sqrt(m1))`
    ZhangOptimal,
    /// Ignores the data.
    Constant(F),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPolicy<F> {
    pub eta: EtaKind<F>,
    pub bias_p: F,
    pub clamp_eps: F,
    pub fallback_eta: F,
    pub fallback_sigma2: F,
    pub fallback_p: F,
}

impl<F: Scalar> TargetPolicy<F> {
    /// Policy with the library defaults: `bias_p = 0.75`, `clamp_eps = 0.01`,
    /// `fallback_eta = fallback_p = 0.5`, `fallback_sigma2 = 1`.
    pub fn new(eta: EtaKind<F>) -> Self {
        Self {
            eta,
            bias_p: F::lit(0.75),
            clamp_eps: F::lit(0.01),
            fallback_eta: F::lit(0.5),
            fallback_sigma2: F::one(),
            fallback_p: F::lit(0.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = F::zero();
        let one = F::one();
        if !(self.bias_p > zero && self.bias_p <= one) {
            return Err(UrnError::Config(format!("bias_p must lie in (0, 1], got {}", self.bias_p)));
        }
        if !(self.clamp_eps > zero && self.clamp_eps < F::lit(0.5)) {
            return Err(UrnError::Config(format!(
                "clamp_eps must lie in (0, 0.5), got {}",
                self.clamp_eps
            )));
        }
        if !(self.fallback_eta > zero && self.fallback_eta < one) {
            return Err(UrnError::Config(format!(
                "fallback_eta must lie in (0, 1), got {}",
                self.fallback_eta
            )));
        }
        if !(self.fallback_p > zero && self.fallback_p < one) {
            return Err(UrnError::Config(format!(
                "fallback_p must lie in (0, 1), got {}",
                self.fallback_p
            )));
        }
        if !(self.fallback_sigma2 > zero) {
            return Err(UrnError::Config(format!(
                "fallback_sigma2 must be positive, got {}",
                self.fallback_sigma2
            )));
        }
        if let EtaKind::Constant(v) = self.eta {
            if !(v > zero && v < one) {
                return Err(UrnError::Config(format!("constant eta must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    /// Evaluates `eta` on the given per-arm parameters, substituting
    /// `fallback_eta` when the formula is degenerate.
    pub fn eta_value(&self, arms: &[ArmParams<F>; 2]) -> EtaValue<F> {
        let [one, two] = arms;
        let raw = match self.eta {
            EtaKind::Wei => eta_wei(one.mean, two.mean),
            EtaKind::RosenbergerSqrt => eta_rosenberger(one.mean, two.mean),
            EtaKind::Neyman => eta_neyman(one.variance.sqrt(), two.variance.sqrt()),
            EtaKind::ZhangOptimal => {
                eta_zhang(one.mean, two.mean, one.variance.sqrt(), two.variance.sqrt())
            }
            EtaKind::Constant(v) => Some(v),
        };
        match raw {
            Some(value) => EtaValue { value, fallback: false },
            None => EtaValue { value: self.fallback_eta, fallback: true },
        }
    }

    /// `(p * eta + 1 - p, p * eta)` clamped into `[clamp_eps, 1 - clamp_eps]`.
    pub fn combine(&self, eta: F) -> [F; 2] {
        let lo = self.clamp_eps;
        let hi = F::one() - self.clamp_eps;
        let f2 = self.bias_p * eta;
        let f1 = f2 + (F::one() - self.bias_p);
        [f1.max(lo).min(hi), f2.max(lo).min(hi)]
    }

    /// Thresholds implied by the true response models.
    pub fn target_thresholds(&self, models: &[ResponseModel<F>; 2]) -> [F; 2] {
        let params = [models[0].true_params(), models[1].true_params()];
        self.combine(self.eta_value(&params).value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaValue<F> {
    pub value: F,
    pub fallback: bool,
}

/// Thresholds produced from the current estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<F> {
    pub rho1: F,
    pub rho2: F,
    /// Some estimate or `eta` itself came from a fallback.
    pub fallback: bool,
}

/// Wei's play-the-winner target. `None` when both success rates are 1.
pub fn eta_wei<F: Scalar>(p1: F, p2: F) -> Option<F> {
    let denom = F::lit(2.0) - p1 - p2;
    (denom >= F::lit(ETA_TOLERANCE)).then(|| (F::one() - p1) / denom)
}

/// Rosenberger's square-root target. `None` when both rates vanish.
pub fn eta_rosenberger<F: Scalar>(p1: F, p2: F) -> Option<F> {
    let tol = F::lit(ETA_TOLERANCE);
    if p1 < tol && p2 < tol {
        return None;
    }
    let (s1, s2) = (p1.max(F::zero()).sqrt(), p2.max(F::zero()).sqrt());
    Some(s1 / (s1 + s2))
}

/// Neyman allocation.
pub fn eta_neyman<F: Scalar>(sigma1: F, sigma2: F) -> Option<F> {
    let denom = sigma1 + sigma2;
    (denom >= F::lit(ETA_TOLERANCE)).then(|| sigma1 / denom)
}

/// Zhang–Rosenberger optimal allocation for Gaussian responses. `None` for
/// nonpositive means.
pub fn eta_zhang<F: Scalar>(m1: F, m2: F, sigma1: F, sigma2: F) -> Option<F> {
    if m1 <= F::zero() || m2 <= F::zero() {
        return None;
    }
    let num = sigma1 * m2.sqrt();
    let denom = num + sigma2 * m1.sqrt();
    (denom >= F::lit(ETA_TOLERANCE)).then(|| num / denom)
}

/// Maximum-likelihood estimates of one arm with policy fallbacks.
///
/// Means need one observation and variances two; the variance uses divisor
/// `N` and is floored at [`VARIANCE_FLOOR`].
pub fn mle<F: Scalar>(stats: &ArmStats<F>, kind: ModelKind, policy: &TargetPolicy<F>) -> ArmParams<F> {
    let n = F::lit(stats.count as f64);
    match kind {
        ModelKind::Bernoulli => {
            if stats.count == 0 {
                let p = policy.fallback_p;
                ArmParams { mean: p, variance: p * (F::one() - p), fallback: true }
            } else {
                let p = stats.sum / n;
                ArmParams { mean: p, variance: p * (F::one() - p), fallback: false }
            }
        }
        ModelKind::Gaussian => {
            let mean = if stats.count >= 1 { stats.sum / n } else { F::zero() };
            let (variance, var_fallback) = if stats.count >= 2 {
                ((stats.sum_sq / n - mean * mean).max(F::lit(VARIANCE_FLOOR)), false)
            } else {
                (policy.fallback_sigma2, true)
            };
            ArmParams { mean, variance, fallback: stats.count == 0 || var_fallback }
        }
    }
}

/// Live thresholds `(rho1_hat, rho2_hat)` from both arms' statistics.
pub fn thresholds_from_estimates<F: Scalar>(
    policy: &TargetPolicy<F>,
    estimates: &ArmEstimates<F>,
    kinds: [ModelKind; 2],
) -> Thresholds<F> {
    let params = [
        mle(&estimates.arms[0], kinds[0], policy),
        mle(&estimates.arms[1], kinds[1], policy),
    ];
    let eta = policy.eta_value(&params);
    let [rho1, rho2] = policy.combine(eta.value);
    Thresholds { rho1, rho2, fallback: eta.fallback || params[0].fallback || params[1].fallback }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Xoshiro256PlusPlus;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn rho1(eta: f64) -> f64 {
        TargetPolicy::<f64>::new(EtaKind::Wei).combine(eta)[0]
    }

    #[test]
    fn wei_examples() {
        let eta = eta_wei(0.9, 0.7).unwrap();
        close(eta, 0.25, 1e-12);
        close(rho1(eta), 0.4375, 1e-12);
        close(eta_wei(0.5, 0.5).unwrap(), 0.5, 1e-15);
        let eta = eta_wei(0.9, 0.1).unwrap();
        close(eta, 0.1, 1e-12);
        close(rho1(eta), 0.325, 1e-12);
        assert_eq!(eta_wei(1.0, 1.0), None);
    }

    #[test]
    fn rosenberger_examples() {
        let eta = eta_rosenberger(0.9, 0.1).unwrap();
        close(eta, 0.75, 1e-12);
        close(rho1(eta), 0.8125, 1e-12);
        let eta = eta_rosenberger(0.9, 0.7).unwrap();
        // sqrt(0.9) / (sqrt(0.9) + sqrt(0.7)) from an independent evaluation
        close(eta, 0.5313730334031141, 1e-12);
        assert_eq!(format!("{:.2}", rho1(eta)), "0.65");
        close(eta_rosenberger(0.3, 0.3).unwrap(), 0.5, 1e-15);
        assert_eq!(eta_rosenberger(0.0, 0.0), None);
    }

    #[test]
    fn neyman_examples() {
        close(rho1(eta_neyman(2.0, 1.0).unwrap()), 0.75, 1e-12);
        close(rho1(eta_neyman(1.0, 1.0).unwrap()), 0.625, 1e-12);
        close(rho1(eta_neyman(1.0, 2.0).unwrap()), 0.5, 1e-12);
    }

    #[test]
    fn zhang_examples() {
        let eta = eta_zhang(10.0, 5.0, 1.0, 1.0).unwrap();
        close(eta, 0.41421, 1e-5);
        close(rho1(eta), 0.56066, 1e-5);
        close(eta_zhang(7.0, 7.0, 1.5, 1.5).unwrap(), 0.5, 1e-15);
        let eta = eta_zhang(6.0, 5.0, 2.0, 1.0).unwrap();
        close(eta, 0.64611, 1e-5);
        close(rho1(eta), 0.73458, 1e-5);
        assert_eq!(eta_zhang(-1.0, 5.0, 1.0, 1.0), None);
    }

    #[test]
    fn update_touches_only_the_allocated_arm() {
        let mut est = ArmEstimates::<f64>::new();
        est.update(Color::Red, 1.0);
        assert_eq!(est.arm(Color::Red), &ArmStats { count: 1, sum: 1.0, sum_sq: 1.0 });
        assert_eq!(est.arm(Color::White), &ArmStats::default());
    }

    #[test]
    fn mle_bernoulli_and_gaussian() {
        let policy = TargetPolicy::<f64>::new(EtaKind::Wei);
        let mut est = ArmEstimates::new();
        for r in [1.0, 0.0, 1.0, 1.0] {
            est.update(Color::Red, r);
        }
        assert_eq!(est.arm(Color::Red).count, 4);
        assert_eq!(mle(est.arm(Color::Red), ModelKind::Bernoulli, &policy).mean, 0.75);

        let mut est = ArmEstimates::new();
        for r in [1.0, 2.0, 3.0] {
            est.update(Color::White, r);
        }
        let fit = mle(est.arm(Color::White), ModelKind::Gaussian, &policy);
        close(fit.mean, 2.0, 1e-15);
        close(fit.variance, 2.0 / 3.0, 1e-12);
        assert!(!fit.fallback);
    }

    #[test]
    fn mle_fallbacks() {
        let policy = TargetPolicy::<f64>::new(EtaKind::Neyman);
        let empty = ArmStats::default();
        let b = mle(&empty, ModelKind::Bernoulli, &policy);
        assert!(b.fallback);
        assert_eq!(b.mean, 0.5);
        let g = mle(&empty, ModelKind::Gaussian, &policy);
        assert!(g.fallback);
        assert_eq!((g.mean, g.variance), (0.0, 1.0));
        let one = ArmStats { count: 1, sum: 4.0, sum_sq: 16.0 };
        let g = mle(&one, ModelKind::Gaussian, &policy);
        assert_eq!((g.mean, g.variance, g.fallback), (4.0, 1.0, true));
        let constant = ArmStats { count: 3, sum: 6.0, sum_sq: 12.0 };
        assert_eq!(mle(&constant, ModelKind::Gaussian, &policy).variance, VARIANCE_FLOOR);
    }

    #[test]
    fn thresholds_examples() {
        let policy = TargetPolicy::<f64>::new(EtaKind::Wei);
        let empty = ArmEstimates::new();
        let t = thresholds_from_estimates(&policy, &empty, [ModelKind::Bernoulli; 2]);
        assert_eq!((t.rho1, t.rho2), (0.625, 0.375));
        assert!(t.fallback);

        let est = ArmEstimates {
            arms: [
                ArmStats { count: 10, sum: 9.0, sum_sq: 9.0 },
                ArmStats { count: 10, sum: 7.0, sum_sq: 7.0 },
            ],
        };
        let t = thresholds_from_estimates(&policy, &est, [ModelKind::Bernoulli; 2]);
        close(t.rho1, 0.4375, 1e-12);
        close(t.rho2, 0.1875, 1e-12);

        let mut policy = TargetPolicy::new(EtaKind::Constant(0.999));
        policy.bias_p = 1.0;
        assert_eq!(policy.combine(0.999), [0.99, 0.99]);
    }

    #[test]
    fn policy_validation() {
        let mut p = TargetPolicy::<f64>::new(EtaKind::Wei);
        assert!(p.validate().is_ok());
        p.bias_p = 0.0;
        assert!(p.validate().is_err());
        p.bias_p = 1.0;
        p.clamp_eps = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn mean_reinforcement_closed_forms() {
        let affine = UtilitySpec::affine(0.1, 1.0).unwrap();
        close(ResponseModel::Bernoulli { p: 0.9 }.mean_reinforcement(&affine), 0.91, 1e-12);
        let clamp = UtilitySpec::clamp(0.1, 20.0).unwrap();
        let g = ResponseModel::Gaussian { mean: 10.0, variance: 4.0 };
        // m + E[(a - X)+] - E[(X - b)+] evaluated with an independent libm erfc
        close(g.mean_reinforcement(&clamp), 10.000000032711156, 1e-12);
        // clipping at a = 0 of a standard normal: E[max(X, 0)] = 1/sqrt(2 pi)
        let half = UtilitySpec::clamp(1e-300, 1e6).unwrap();
        close(
            ResponseModel::Gaussian { mean: 0.0, variance: 1.0 }.mean_reinforcement(&half),
            1.0 / (2.0 * std::f64::consts::PI).sqrt(),
            1e-12,
        );
    }

    #[test]
    fn mle_consistency_harness() {
        // 4 standard errors at n = 1e4, 99% of seeds.
        let models = [
            ResponseModel::Bernoulli { p: 0.3 },
            ResponseModel::Gaussian { mean: 6.0, variance: 4.0 },
        ];
        let policy = TargetPolicy::<f64>::new(EtaKind::Neyman);
        let n = 10_000u64;
        let seeds = 200;
        let mut ok = 0;
        for seed in 0..seeds {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
            let mut est = ArmEstimates::new();
            for _ in 0..n {
                est.update(Color::Red, models[0].sample(&mut rng));
                est.update(Color::White, models[1].sample(&mut rng));
            }
            let b = mle(est.arm(Color::Red), ModelKind::Bernoulli, &policy);
            let g = mle(est.arm(Color::White), ModelKind::Gaussian, &policy);
            let se_p = (0.3f64 * 0.7 / n as f64).sqrt();
            let se_m = (4.0 / n as f64).sqrt();
            let se_v = (2.0 * 16.0 / n as f64).sqrt();
            if (b.mean - 0.3).abs() < 4.0 * se_p
                && (g.mean - 6.0).abs() < 4.0 * se_m
                && (g.variance - 4.0).abs() < 4.0 * se_v
            {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.99 * seeds as f64, "{ok}/{seeds}");
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn swap(eta: EtaKind<f64>, a: [ArmParams<f64>; 2]) -> (f64, f64) {
        let policy = TargetPolicy::new(eta);
        let fwd = policy.eta_value(&a).value;
        let back = policy.eta_value(&[a[1], a[0]]).value;
        (fwd, back)
    }

    fn params(mean: f64, variance: f64) -> ArmParams<f64> {
        ArmParams { mean, variance, fallback: false }
    }

    proptest! {
        #[test]
        fn eta_swap_symmetry(p1 in 0.01f64..0.99, p2 in 0.01f64..0.99,
                             m1 in 0.5f64..20.0, m2 in 0.5f64..20.0,
                             v1 in 0.1f64..9.0, v2 in 0.1f64..9.0) {
            for kind in [EtaKind::Wei, EtaKind::RosenbergerSqrt] {
                let (f, b) = swap(kind, [params(p1, 0.0), params(p2, 0.0)]);
                prop_assert!((f + b - 1.0).abs() < 1e-12);
            }
            for kind in [EtaKind::Neyman, EtaKind::ZhangOptimal] {
                let (f, b) = swap(kind, [params(m1, v1), params(m2, v2)]);
                prop_assert!((f + b - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn combined_thresholds_are_ordered_and_clamped(eta in 0.0f64..1.0, bias in 0.001f64..1.0,
                                                       eps in 0.001f64..0.499) {
            let mut policy = TargetPolicy::new(EtaKind::Wei);
            policy.bias_p = bias;
            policy.clamp_eps = eps;
            let f2 = bias * eta;
            let f1 = f2 + (1.0 - bias);
            prop_assert!((f1 - f2 - (1.0 - bias)).abs() < 1e-12);
            let [r1, r2] = policy.combine(eta);
            prop_assert!(r1 >= r2);
            prop_assert!(r1 >= eps && r1 <= 1.0 - eps);
            prop_assert!(r2 >= eps && r2 <= 1.0 - eps);
        }

        #[test]
        fn estimates_are_a_pure_fold(obs in proptest::collection::vec((any::<bool>(), -5.0f64..5.0), 0..60)) {
            let mut interleaved = ArmEstimates::new();
            for &(red, r) in &obs {
                interleaved.update(if red { Color::Red } else { Color::White }, r);
            }
            let mut grouped = ArmEstimates::new();
            for &(red, r) in obs.iter().filter(|o| o.0) {
                grouped.update(if red { Color::Red } else { Color::White }, r);
            }
            for &(red, r) in obs.iter().filter(|o| !o.0) {
                grouped.update(if red { Color::Red } else { Color::White }, r);
            }
            prop_assert_eq!(interleaved, grouped);
        }
    }
}
