//! Bi-criteria surrogate losses: quasi-concave bivariate functions ψ(h, g)
//! of a margin factor and a loss factor, with analytic gradients and
//! sampled axiom checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::erf;
use std::collections::BTreeSet;
use thiserror::Error;

/// Default ProbLoss variance factor: Var = 2g/π, which sets the slope of
/// ψ in h at h=0 to √g (and to 1 when g=1).
pub const PROBLOSS_SCALE: f64 = 2.0 / std::f64::consts::PI;

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("{family}: g={g} outside the family's sign regime")]
    DomainError { family: &'static str, g: f64 },
    #[error("invalid loss parameters: {0}")]
    InvalidParams(String),
    #[error("true label set is empty")]
    EmptyTruth,
}

/// The ψ families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossFamily {
    /// ψ = h + g
    MarginRescaling,
    /// ψ = (h + 1)·g
    SlackRescaling,
    /// ψ = h·g^β + g^α with α ≤ −1 or α ≥ 0 and 0 ≤ β−α ≤ 1
    GeneralizedScaling { alpha: f64, beta: f64 },
    /// ψ = h·g^β + g with 0 ≤ β ≤ 1
    BetaScaling { beta: f64 },
    /// ψ = g·log2(exp(h) + 1), normalized so ψ(0, g) = g
    LossScaledLog,
    /// ψ = 2g·N_cdf(h; 0, scale·g)
    ProbLoss { scale: f64 },
    /// ProbLoss for h ≤ 0, g + √g·h for h > 0
    ProbLossConvexExt { scale: f64 },
    /// ψ = h / (−g) with g < 0
    MicroF1Surrogate,
}

/// A validated surrogate-loss descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiCriteriaLoss {
    family: LossFamily,
}

/// Sign convention of a factor pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorConvention {
    /// h = m(y), g = L(y, yᵢ) ≥ 0
    MarginHamming,
    /// h = H(y, yᵢ) + m(y), g = −(|y| + |yᵢ|) < 0
    MicroF1,
}

/// The (h, g) image of a label under a factor convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorPair {
    pub h: f64,
    pub g: f64,
    pub convention: FactorConvention,
}

/// Counts of axiom violations over a sampled domain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PropertyReport {
    pub samples: usize,
    pub monotone_violations: usize,
    pub quasiconcavity_violations: usize,
    pub diagonal_violations: usize,
}

impl PropertyReport {
    pub fn is_clean(&self) -> bool {
        self.monotone_violations == 0
            && self.quasiconcavity_violations == 0
            && self.diagonal_violations == 0
    }
}

fn normal_cdf(x: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return if x > 0.0 {
            1.0
        } else if x < 0.0 {
            0.0
        } else {
            0.5
        };
    }
    0.5 * (1.0 + erf::erf(x / (2.0 * var).sqrt()))
}

fn normal_pdf(x: f64, var: f64) -> f64 {
    if var <= 0.0 {
        return 0.0;
    }
    (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// log(exp(h) + 1), stable for large |h|.
fn softplus(h: f64) -> f64 {
    if h > 30.0 {
        h + (-h).exp().ln_1p()
    } else {
        h.exp().ln_1p()
    }
}

fn logistic(h: f64) -> f64 {
    if h >= 0.0 {
        1.0 / (1.0 + (-h).exp())
    } else {
        let e = h.exp();
        e / (1.0 + e)
    }
}

impl BiCriteriaLoss {
    pub fn margin_rescaling() -> Self {
        BiCriteriaLoss {
            family: LossFamily::MarginRescaling,
        }
    }

    pub fn slack_rescaling() -> Self {
        BiCriteriaLoss {
            family: LossFamily::SlackRescaling,
        }
    }

    pub fn generalized_scaling(alpha: f64, beta: f64) -> Result<Self, LossError> {
        if !(alpha <= -1.0 || alpha >= 0.0) {
            return Err(LossError::InvalidParams(format!(
                "generalized scaling needs alpha <= -1 or alpha >= 0, got {alpha}"
            )));
        }
        let d = beta - alpha;
        if !(0.0..=1.0).contains(&d) {
            return Err(LossError::InvalidParams(format!(
                "generalized scaling needs 0 <= beta-alpha <= 1, got {d}"
            )));
        }
        Ok(BiCriteriaLoss {
            family: LossFamily::GeneralizedScaling { alpha, beta },
        })
    }

    pub fn beta_scaling(beta: f64) -> Result<Self, LossError> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(LossError::InvalidParams(format!(
                "beta scaling needs 0 <= beta <= 1, got {beta}"
            )));
        }
        Ok(BiCriteriaLoss {
            family: LossFamily::BetaScaling { beta },
        })
    }

    pub fn loss_scaled_log() -> Self {
        BiCriteriaLoss {
            family: LossFamily::LossScaledLog,
        }
    }

    pub fn probloss() -> Self {
        BiCriteriaLoss {
            family: LossFamily::ProbLoss {
                scale: PROBLOSS_SCALE,
            },
        }
    }

    pub fn probloss_with_scale(scale: f64) -> Result<Self, LossError> {
        if scale <= 0.0 {
            return Err(LossError::InvalidParams(format!(
                "probloss scale must be positive, got {scale}"
            )));
        }
        Ok(BiCriteriaLoss {
            family: LossFamily::ProbLoss { scale },
        })
    }

    pub fn probloss_convex_ext() -> Self {
        BiCriteriaLoss {
            family: LossFamily::ProbLossConvexExt {
                scale: PROBLOSS_SCALE,
            },
        }
    }

    pub fn micro_f1() -> Self {
        BiCriteriaLoss {
            family: LossFamily::MicroF1Surrogate,
        }
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            LossFamily::MarginRescaling => "margin",
            LossFamily::SlackRescaling => "slack",
            LossFamily::GeneralizedScaling { .. } => "genscale",
            LossFamily::BetaScaling { .. } => "betascale",
            LossFamily::LossScaledLog => "logloss",
            LossFamily::ProbLoss { .. } => "probloss",
            LossFamily::ProbLossConvexExt { .. } => "probloss-ext",
            LossFamily::MicroF1Surrogate => "microf1",
        }
    }

    /// Expected sign of g for this family; `None` means unconstrained.
    pub fn g_regime(&self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        match self.family {
            LossFamily::MarginRescaling => None,
            LossFamily::MicroF1Surrogate => Some(Less),
            _ => Some(Greater),
        }
    }

    fn check_domain(&self, g: f64) -> Result<(), LossError> {
        let ok = match self.family {
            LossFamily::MarginRescaling => true,
            LossFamily::SlackRescaling
            | LossFamily::BetaScaling { .. }
            | LossFamily::LossScaledLog
            | LossFamily::ProbLoss { .. } => g >= 0.0,
            LossFamily::GeneralizedScaling { .. } => g > 0.0,
            LossFamily::ProbLossConvexExt { .. } => g > 0.0,
            LossFamily::MicroF1Surrogate => g < 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(LossError::DomainError {
                family: self.name(),
                g,
            })
        }
    }

    /// ψ(h, g).
    pub fn psi_value(&self, h: f64, g: f64) -> Result<f64, LossError> {
        self.check_domain(g)?;
        Ok(match self.family {
            LossFamily::MarginRescaling => h + g,
            LossFamily::SlackRescaling => (h + 1.0) * g,
            LossFamily::GeneralizedScaling { alpha, beta } => h * g.powf(beta) + g.powf(alpha),
            LossFamily::BetaScaling { beta } => {
                if g == 0.0 {
                    0.0
                } else {
                    h * g.powf(beta) + g
                }
            }
            LossFamily::LossScaledLog => g * softplus(h) / LN_2,
            LossFamily::ProbLoss { scale } => 2.0 * g * normal_cdf(h, scale * g),
            LossFamily::ProbLossConvexExt { scale } => {
                if h > 0.0 {
                    g + g.sqrt() * h
                } else {
                    2.0 * g * normal_cdf(h, scale * g)
                }
            }
            LossFamily::MicroF1Surrogate => h / (-g),
        })
    }

    /// Analytic partials (∂ψ/∂h, ∂ψ/∂g).
    pub fn psi_grad(&self, h: f64, g: f64) -> Result<(f64, f64), LossError> {
        self.check_domain(g)?;
        Ok(match self.family {
            LossFamily::MarginRescaling => (1.0, 1.0),
            LossFamily::SlackRescaling => (g, h + 1.0),
            LossFamily::GeneralizedScaling { alpha, beta } => (
                g.powf(beta),
                beta * h * g.powf(beta - 1.0) + alpha * g.powf(alpha - 1.0),
            ),
            LossFamily::BetaScaling { beta } => {
                (g.powf(beta), beta * h * g.powf(beta - 1.0) + 1.0)
            }
            LossFamily::LossScaledLog => (g * logistic(h) / LN_2, softplus(h) / LN_2),
            LossFamily::ProbLoss { scale } => {
                let var = scale * g;
                let dh = 2.0 * g * normal_pdf(h, var);
                // u = h/σ; dψ/dg = 2Φ(u) − u·φ_std(u)
                let dg = if g == 0.0 {
                    if h > 0.0 {
                        2.0
                    } else if h < 0.0 {
                        0.0
                    } else {
                        1.0
                    }
                } else {
                    let sigma = var.sqrt();
                    let u = h / sigma;
                    let phi_std = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
                    2.0 * normal_cdf(h, var) - u * phi_std
                };
                (dh, dg)
            }
            LossFamily::ProbLossConvexExt { scale } => {
                if h > 0.0 {
                    (g.sqrt(), 1.0 + 0.5 * h / g.sqrt())
                } else {
                    let var = scale * g;
                    let dh = 2.0 * g * normal_pdf(h, var);
                    let sigma = var.sqrt();
                    let u = h / sigma;
                    let phi_std = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
                    (dh, 2.0 * normal_cdf(h, var) - u * phi_std)
                }
            }
            LossFamily::MicroF1Surrogate => (1.0 / (-g), h / (g * g)),
        })
    }

    /// Sampled axiom check on the family's quasi-concavity domain: monotone
    /// increase in each argument, midpoint quasi-concavity for super-level
    /// sets, and strict diagonal increase.
    pub fn check_bicriteria_axioms(&self, samples: usize, seed: u64) -> PropertyReport {
        assert!(samples >= 100, "need at least 100 samples");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut report = PropertyReport {
            samples,
            ..Default::default()
        };

        // Sampling boxes per family. Generalized scaling with fractional
        // exponents is quasi-concave only for h >= 0; the alpha <= -1 branch
        // is covered through the Micro-F1 factor convention instead.
        let (h_lo, h_hi, g_lo, g_hi) = match self.family {
            LossFamily::MicroF1Surrogate => (0.0, 6.0, -8.0, -0.5),
            LossFamily::GeneralizedScaling { .. } => (0.0, 4.0, 0.05, 8.0),
            _ => (-2.0, 4.0, 0.05, 8.0),
        };
        let draw = |rng: &mut ChaCha8Rng| -> (f64, f64) {
            loop {
                let h = rng.gen_range(h_lo..h_hi);
                let g = rng.gen_range(g_lo..g_hi);
                if let Ok(v) = self.psi_value(h, g) {
                    if v >= 0.0 {
                        return (h, g);
                    }
                }
            }
        };

        for _ in 0..samples {
            let (h, g) = draw(&mut rng);
            let v = self.psi_value(h, g).unwrap();
            let eps = rng.gen_range(1e-4..0.4);

            // Monotone increase in each argument, staying inside the domain.
            let h2 = h + eps;
            if self.psi_value(h2, g).map(|v2| v2 < v - 1e-9) == Ok(true) {
                report.monotone_violations += 1;
            }
            let g2 = if g < 0.0 { (g + eps).min(-1e-6) } else { g + eps };
            if self.psi_value(h, g2).map(|v2| v2 < v - 1e-9) == Ok(true) {
                report.monotone_violations += 1;
            }

            // Strict diagonal increase; exempt the underflowed tail where ψ is
            // not representable above zero.
            let gd = if g < 0.0 { (g + eps).min(-1e-6) } else { g + eps };
            if let Ok(vd) = self.psi_value(h + eps, gd) {
                if vd <= v && v > 1e-12 {
                    report.diagonal_violations += 1;
                }
            }

            // Midpoint quasi-concavity against a second sample.
            let (h_b, g_b) = draw(&mut rng);
            let v_b = self.psi_value(h_b, g_b).unwrap();
            let level = v.min(v_b);
            let (hm, gm) = (0.5 * (h + h_b), 0.5 * (g + g_b));
            if let Ok(vm) = self.psi_value(hm, gm) {
                if vm < level - 1e-9 * level.abs().max(1.0) {
                    report.quasiconcavity_violations += 1;
                }
            }
        }
        report
    }
}

/// The convex extension of ProbLoss at the default scale.
pub fn probloss_convex_ext(h: f64, g: f64) -> Result<f64, LossError> {
    BiCriteriaLoss::probloss_convex_ext().psi_value(h, g)
}

/// Builds the Micro-F1 factor pair for a predicted and true label set.
///
/// `h = Hamming(y, y_true) + margin`, `g = −(|y| + |y_true|)`; at zero margin
/// `ψ(h, g) = 1 − MicroF1(y, y_true)` exactly.
pub fn microf1_factors(
    y: &BTreeSet<u32>,
    y_true: &BTreeSet<u32>,
    margin: f64,
) -> Result<FactorPair, LossError> {
    if y_true.is_empty() {
        return Err(LossError::EmptyTruth);
    }
    let inter = y.intersection(y_true).count();
    let hamming = (y.len() - inter) + (y_true.len() - inter);
    Ok(FactorPair {
        h: hamming as f64 + margin,
        g: -((y.len() + y_true.len()) as f64),
        convention: FactorConvention::MicroF1,
    })
}
