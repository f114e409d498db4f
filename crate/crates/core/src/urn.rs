//! Single-step dynamics of the two-color urn.
//!
//! At each step one uniform decides the color (red iff `u < z`), then the
//! allocated arm's response is drawn and, if the arm's indicator is open,
//! `u(response)` balls of the drawn color are added. Red is gated by
//! `z <= rho1`, white by `z >= rho2`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, UrnError};
use crate::rng::RandomStream;
use crate::scalar::Scalar;
use crate::targets::ResponseModel;

/// Ball color; red is treatment 1, white is treatment 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    White,
}

impl Color {
    pub fn index(self) -> usize {
        match self {
            Color::Red => 0,
            Color::White => 1,
        }
    }

    /// `1` for red, `0` for white.
    pub fn indicator(self) -> u8 {
        match self {
            Color::Red => 1,
            Color::White => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityKind {
    /// `a + (b - a) x`, intended for responses in `[0, 1]`.
    Affine,
    /// `min(max(x, a), b)`.
    Clamp,
}

/// Map from responses to reinforcements with range `[a, b]`, `0 < a <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec<F> {
    kind: UtilityKind,
    a: F,
    b: F,
}

impl<F: Scalar> UtilitySpec<F> {
    pub fn new(kind: UtilityKind, a: F, b: F) -> Result<Self> {
        if !(a > F::zero() && a <= b && b.is_finite()) {
            return Err(UrnError::Config(format!(
                "utility bounds must satisfy 0 < a <= b < inf, got a={a}, b={b}"
            )));
        }
        Ok(Self { kind, a, b })
    }

    pub fn affine(a: F, b: F) -> Result<Self> {
        Self::new(UtilityKind::Affine, a, b)
    }

    pub fn clamp(a: F, b: F) -> Result<Self> {
        Self::new(UtilityKind::Clamp, a, b)
    }

    pub fn kind(&self) -> UtilityKind {
        self.kind
    }

    pub fn a(&self) -> F {
        self.a
    }

    pub fn b(&self) -> F {
        self.b
    }

    /// Applies the utility. The result always lies in `[a, b]`.
    pub fn apply(&self, x: F) -> F {
        let y = match self.kind {
            UtilityKind::Affine => self.a + (self.b - self.a) * x,
            UtilityKind::Clamp => x,
        };
        y.max(self.a).min(self.b)
    }
}

/// Urn composition after `step_index` draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrnState<F> {
    pub step_index: u64,
    pub y1: F,
    pub y2: F,
    pub n1: u64,
    pub n2: u64,
}

impl<F: Scalar> UrnState<F> {
    pub fn new(y1: F, y2: F) -> Result<Self> {
        if !(y1 > F::zero() && y2 > F::zero() && y1.is_finite() && y2.is_finite()) {
            return Err(UrnError::Config(format!(
                "initial ball masses must be positive and finite, got ({y1}, {y2})"
            )));
        }
        Ok(Self { step_index: 0, y1, y2, n1: 0, n2: 0 })
    }

    pub fn total(&self) -> F {
        self.y1 + self.y2
    }

    /// Proportion of red mass.
    pub fn z(&self) -> F {
        self.y1 / (self.y1 + self.y2)
    }

    /// `N1 / n`, or `None` before the first draw.
    pub fn allocation_fraction(&self) -> Option<f64> {
        (self.step_index > 0).then(|| self.n1 as f64 / self.step_index as f64)
    }
}

/// Everything observed during one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTrace<F> {
    pub drawn: Color,
    pub uniform: f64,
    pub response: F,
    /// Mass actually added (zero when the indicator was closed).
    pub reinforcement: F,
    pub w1: bool,
    pub w2: bool,
    pub rho1_used: F,
    pub rho2_used: F,
}

/// Red iff `u < z`.
pub fn draw_color<F: Scalar>(z: F, u: f64) -> Result<Color> {
    if !(z > F::zero() && z < F::one()) {
        return Err(UrnError::Domain(format!("urn proportion must lie in (0, 1), got {z}")));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(UrnError::Domain(format!("uniform draw must lie in [0, 1), got {u}")));
    }
    Ok(if u < z.as_f64() { Color::Red } else { Color::White })
}

/// Advances the urn by one draw.
///
/// Consumes one uniform for the color, then the drawn arm's response; the
/// other arm is never sampled. The response is reported even when the
/// indicator withholds reinforcement.
pub fn step<F: Scalar, R: RandomStream + ?Sized>(
    state: &UrnState<F>,
    rho1: F,
    rho2: F,
    rng: &mut R,
    models: &[ResponseModel<F>; 2],
    utility: &UtilitySpec<F>,
) -> (UrnState<F>, StepTrace<F>) {
    debug_assert!(rho1 >= rho2, "thresholds out of order: {rho1} < {rho2}");
    let z = state.z();
    let w1 = z <= rho1;
    let w2 = z >= rho2;
    let uniform = rng.uniform();
    let drawn = draw_color(z, uniform).expect("a valid urn state has z in (0, 1)");
    let response = models[drawn.index()].sample(rng);
    let open = match drawn {
        Color::Red => w1,
        Color::White => w2,
    };
    let reinforcement = if open { utility.apply(response) } else { F::zero() };

    let mut next = *state;
    next.step_index += 1;
    match drawn {
        Color::Red => {
            next.n1 += 1;
            next.y1 = next.y1 + reinforcement;
        }
        Color::White => {
            next.n2 += 1;
            next.y2 = next.y2 + reinforcement;
        }
    }
    let trace = StepTrace { drawn, uniform, response, reinforcement, w1, w2, rho1_used: rho1, rho2_used: rho2 };
    (next, trace)
}

/// Runtime check of the increment bound: once the total mass exceeds
/// `b (1 - eps) / eps`, a single step moves `z` by less than `eps`.
pub fn increment_bound_check<F: Scalar>(prev: &UrnState<F>, next: &UrnState<F>, eps: f64, b: f64) -> bool {
    let total = prev.total().as_f64();
    total <= b * (1.0 - eps) / eps || (next.z().as_f64() - prev.z().as_f64()).abs() < eps
}
