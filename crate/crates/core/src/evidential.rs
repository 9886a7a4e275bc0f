// SPDX-License-Identifier: Apache-2.0

//! Binary evidential classification: Dirichlet beliefs, the evidential log
//! loss with KL evidence regularization, the BCE baseline, and the
//! likelihood-ratio scores derived from both heads.
//!
//! Class index 0 is in-distribution, index 1 is out-of-distribution.

use crate::error::{Error, Result};
use crate::numkernel::{digamma, lgamma, trigamma};
use crate::Scalar;

/// Logits are clamped to `±LOGIT_CLAMP` before exponentiation.
pub const LOGIT_CLAMP: f64 = 30.0;

/// Probabilities entering BCE or odds are clamped to `[ε, 1 − ε]`.
pub const PROB_EPS: f64 = 1e-12;

/// Number of epochs over which the KL weight ramps from 0 to 1.
pub const ANNEALING_EPOCHS: usize = 10;

/// Per-pixel binary ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryLabel {
    InDistribution,
    OutOfDistribution,
}

impl BinaryLabel {
    pub fn from_index(index: u8) -> Result<Self> {
        match index {
            0 => Ok(BinaryLabel::InDistribution),
            1 => Ok(BinaryLabel::OutOfDistribution),
            other => Err(Error::domain(format!("label must be 0 or 1, got {other}"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            BinaryLabel::InDistribution => 0,
            BinaryLabel::OutOfDistribution => 1,
        }
    }

    pub fn one_hot<T: Scalar>(self) -> [T; 2] {
        match self {
            BinaryLabel::InDistribution => [T::one(), T::zero()],
            BinaryLabel::OutOfDistribution => [T::zero(), T::one()],
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            BinaryLabel::InDistribution => BinaryLabel::OutOfDistribution,
            BinaryLabel::OutOfDistribution => BinaryLabel::InDistribution,
        }
    }
}

/// Non-negative per-class evidence `e = exp(o)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evidence<T> {
    e: [T; 2],
}

impl<T: Scalar> Evidence<T> {
    pub fn new(e0: T, e1: T) -> Result<Self> {
        for e in [e0, e1] {
            if !(e.is_finite() && e >= T::zero()) {
                return Err(Error::domain(format!("evidence must be finite and >= 0, got {e}")));
            }
        }
        Ok(Evidence { e: [e0, e1] })
    }

    pub fn values(&self) -> [T; 2] {
        self.e
    }
}

/// Concentration parameters of a two-class Dirichlet, both `>= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletParams<T> {
    alpha: [T; 2],
}

impl<T: Scalar> DirichletParams<T> {
    pub fn new(alpha0: T, alpha1: T) -> Result<Self> {
        for a in [alpha0, alpha1] {
            if !(a.is_finite() && a >= T::one()) {
                return Err(Error::domain(format!(
                    "Dirichlet parameter must be finite and >= 1, got {a}"
                )));
            }
        }
        Ok(DirichletParams {
            alpha: [alpha0, alpha1],
        })
    }

    pub fn alpha(&self) -> [T; 2] {
        self.alpha
    }

    /// Dirichlet strength `S = α₀ + α₁`.
    pub fn strength(&self) -> T {
        self.alpha[0] + self.alpha[1]
    }
}

/// Per-pixel components of the evidential objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<T> {
    pub log_loss: T,
    pub kl_reg: T,
    pub lambda_t: T,
    pub total: T,
}

#[inline]
fn clamp_logit<T: Scalar>(o: T) -> T {
    let c = T::lit(LOGIT_CLAMP);
    o.max(-c).min(c)
}

pub fn evidence_from_logits<T: Scalar>(o: [T; 2]) -> Result<Evidence<T>> {
    if o.iter().any(|v| v.is_nan()) {
        return Err(Error::domain("NaN logit"));
    }
    Ok(Evidence {
        e: [clamp_logit(o[0]).exp(), clamp_logit(o[1]).exp()],
    })
}

pub fn dirichlet_from_evidence<T: Scalar>(e: Evidence<T>) -> DirichletParams<T> {
    DirichletParams {
        alpha: [e.e[0] + T::one(), e.e[1] + T::one()],
    }
}

/// Logits straight to Dirichlet parameters.
pub fn dirichlet_from_logits<T: Scalar>(o: [T; 2]) -> Result<DirichletParams<T>> {
    evidence_from_logits(o).map(dirichlet_from_evidence)
}

/// Vacuity `ν = K / S` with `K = 2`.
pub fn vacuity<T: Scalar>(a: DirichletParams<T>) -> T {
    T::lit(2.0) / a.strength()
}

/// Expected class probabilities `α / S`.
pub fn expected_prob<T: Scalar>(a: DirichletParams<T>) -> [T; 2] {
    let s = a.strength();
    [a.alpha[0] / s, a.alpha[1] / s]
}

/// Likelihood-ratio score `α₁ / α₀` of the evidential head.
pub fn lr_score<T: Scalar>(a: DirichletParams<T>) -> T {
    a.alpha[1] / a.alpha[0]
}

fn clamp_prob<T: Scalar>(p: T) -> T {
    let eps = T::lit(PROB_EPS);
    p.max(eps).min(T::one() - eps)
}

/// Odds `p / (1 − p)` of the sigmoid head, with `p` clamped to `[ε, 1 − ε]`.
pub fn lr_from_sigmoid<T: Scalar>(p1: T) -> Result<T> {
    if p1.is_nan() || p1 < T::zero() || p1 > T::one() {
        return Err(Error::domain(format!("probability must lie in [0, 1], got {p1}")));
    }
    let p = clamp_prob(p1);
    Ok(p / (T::one() - p))
}

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let ez = z.exp();
        ez / (T::one() + ez)
    }
}

/// Evidential log loss `log S − log α_c` for the correct class `c`.
pub fn edl_log_loss<T: Scalar>(a: DirichletParams<T>, y: BinaryLabel) -> T {
    a.strength().ln() - a.alpha[y.index()].ln()
}

/// Parameters with the correct-class evidence removed: `α̃ = y + (1 − y) ⊙ α`.
pub fn misleading_params<T: Scalar>(a: DirichletParams<T>, y: BinaryLabel) -> DirichletParams<T> {
    let mut alpha = a.alpha;
    alpha[y.index()] = T::one();
    DirichletParams { alpha }
}

/// `KL(Dir(α) ‖ Dir(1))` in closed form.
pub fn kl_to_uniform<T: Scalar>(a: DirichletParams<T>) -> T {
    let s = a.strength();
    let k = T::lit(2.0);
    // arguments are >= 1 by construction, so the special functions cannot fail
    let lg = |x: T| lgamma(x).expect("argument >= 1");
    let dg = |x: T| digamma(x).expect("argument >= 1");
    let psi_s = dg(s);
    let mut kl = lg(s) - lg(k);
    for &ak in &a.alpha {
        kl = kl - lg(ak) + (ak - T::one()) * (dg(ak) - psi_s);
    }
    // rounding can leave a tiny negative residue at α̃ = (1, 1)
    kl.max(T::zero())
}

/// KL evidence regularizer: divergence of the misleading-evidence Dirichlet
/// from the uniform Dirichlet.
pub fn edl_kl_reg<T: Scalar>(a: DirichletParams<T>, y: BinaryLabel) -> T {
    kl_to_uniform(misleading_params(a, y))
}

/// Annealing weight `λ_t = min(1, t / 10)` for the 0-based epoch `t`.
pub fn annealing_coefficient<T: Scalar>(epoch: usize) -> T {
    T::from_usize_lossy(epoch.min(ANNEALING_EPOCHS)) / T::from_usize_lossy(ANNEALING_EPOCHS)
}

pub fn edl_total_loss<T: Scalar>(a: DirichletParams<T>, y: BinaryLabel, epoch: usize) -> LossBreakdown<T> {
    let lambda_t = annealing_coefficient(epoch);
    edl_total_loss_weighted(a, y, lambda_t)
}

/// Total loss with an explicit regularizer weight.
pub fn edl_total_loss_weighted<T: Scalar>(a: DirichletParams<T>, y: BinaryLabel, lambda_t: T) -> LossBreakdown<T> {
    let log_loss = edl_log_loss(a, y);
    let kl_reg = edl_kl_reg(a, y);
    LossBreakdown {
        log_loss,
        kl_reg,
        lambda_t,
        total: log_loss + lambda_t * kl_reg,
    }
}

/// Binary cross-entropy of the sigmoid head, `p1` clamped to `[ε, 1 − ε]`.
pub fn bce_loss<T: Scalar>(p1: T, y: BinaryLabel) -> T {
    let p = clamp_prob(p1);
    match y {
        BinaryLabel::OutOfDistribution => -p.ln(),
        BinaryLabel::InDistribution => -(T::one() - p).ln(),
    }
}

/// BCE from a logit together with its derivative with respect to the logit.
///
/// Where the probability sits in the clamped region the derivative is zero.
pub fn bce_loss_grad<T: Scalar>(z: T, y: BinaryLabel) -> (T, T) {
    let p = sigmoid(z);
    let eps = T::lit(PROB_EPS);
    let loss = bce_loss(p, y);
    let grad = if p <= eps || p >= T::one() - eps {
        T::zero()
    } else {
        p - y.one_hot::<T>()[1]
    };
    (loss, grad)
}

/// Total evidential loss and its gradient with respect to the two logits.
pub fn edl_loss_grad<T: Scalar>(o: [T; 2], y: BinaryLabel, epoch: usize) -> Result<(LossBreakdown<T>, [T; 2])> {
    edl_loss_grad_weighted(o, y, annealing_coefficient(epoch))
}

/// As [`edl_loss_grad`] with an explicit regularizer weight.
pub fn edl_loss_grad_weighted<T: Scalar>(o: [T; 2], y: BinaryLabel, lambda_t: T) -> Result<(LossBreakdown<T>, [T; 2])> {
    let e = evidence_from_logits(o)?.values();
    let a = DirichletParams {
        alpha: [e[0] + T::one(), e[1] + T::one()],
    };
    let breakdown = edl_total_loss_weighted(a, y, lambda_t);

    let s = a.strength();
    let c = y.index();
    let w = 1 - c;
    // d/dα_k (log S − log α_c) = 1/S − [k = c]/α_c
    let mut d_alpha = [s.recip(), s.recip()];
    d_alpha[c] = d_alpha[c] - a.alpha[c].recip();

    // KL(Dir(1, a_w)): d/da_w = (a_w − 1) ψ'(a_w) − (S̃ − K) ψ'(S̃); α̃_c is constant.
    let tilde_w = a.alpha[w];
    let tilde_s = tilde_w + T::one();
    let tg = |x: T| trigamma(x).expect("argument >= 1");
    let d_kl = (tilde_w - T::one()) * tg(tilde_w) - (tilde_s - T::lit(2.0)) * tg(tilde_s);
    d_alpha[w] = d_alpha[w] + lambda_t * d_kl;

    let limit = T::lit(LOGIT_CLAMP);
    let mut grad = [T::zero(); 2];
    for k in 0..2 {
        // dα_k/do_k = e_k inside the clamp, zero outside
        if o[k].abs() < limit {
            grad[k] = d_alpha[k] * e[k];
        }
    }
    Ok((breakdown, grad))
}
