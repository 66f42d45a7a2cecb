//! Inequality records with operand provenance and direction checks.

use serde::{Deserialize, Serialize};

use crate::comparison::{self, BoundInputs, Provenance, Tagged};
use crate::error::{FinslerError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hardness {
    /// A failure sets a nonzero exit status.
    Hard,
    /// Reported only.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Lhs,
    Rhs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Operand {
    pub name: String,
    pub value: f64,
    pub provenance: Provenance,
}

impl Operand {
    pub fn new(name: &str, t: Tagged) -> Self {
        Self { name: name.to_string(), value: t.value, provenance: t.provenance }
    }
}

/// A checked inequality `lhs ≤ rhs`, with a relative slack applied to one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityRecord {
    pub name: String,
    pub statement: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub slack_on: Side,
    pub satisfied: bool,
    /// `(rhs' − lhs') / |rhs'|` after applying the slack.
    pub margin: f64,
    pub hardness: Hardness,
    pub operands: Vec<Operand>,
}

impl InequalityRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        statement: &str,
        lhs: f64,
        rhs: f64,
        slack: f64,
        slack_on: Side,
        hardness: Hardness,
        operands: Vec<Operand>,
    ) -> Self {
        let (l, r) = match slack_on {
            Side::Lhs => (lhs * (1.0 - slack), rhs),
            Side::Rhs => (lhs, rhs * (1.0 + slack)),
        };
        let satisfied = l <= r;
        let margin = if r != 0.0 { (r - l) / r.abs() } else { r - l };
        Self {
            name: name.to_string(),
            statement: statement.to_string(),
            lhs,
            rhs,
            slack,
            slack_on,
            satisfied,
            margin,
            hardness,
            operands,
        }
    }

    pub fn is_hard_failure(&self) -> bool {
        self.hardness == Hardness::Hard && !self.satisfied
    }
}

fn require(t: Option<Tagged>, what: &str) -> Result<Tagged> {
    t.ok_or_else(|| FinslerError::IncompleteVerification(what.to_string()))
}

/// `λ₁ ≥ h²/(4λ_F²)`. Only a Cheeger value known exactly or from below may
/// enter a lower bound; sweep upper bounds are refused.
pub fn cheeger_eigen_lower(
    lambda1: Option<Tagged>,
    h: Option<Tagged>,
    lambda_f: Option<Tagged>,
    slack: f64,
) -> Result<InequalityRecord> {
    let (lambda1, h, lambda_f) = (require(lambda1, "lambda1")?, require(h, "h")?, require(lambda_f, "lambda_F")?);
    if !matches!(h.provenance, Provenance::Exact | Provenance::LowerBound) {
        return Err(FinslerError::DirectionViolation(format!(
            "lower bound on lambda1 needs h exact or from below, got {:?}",
            h.provenance
        )));
    }
    let bound = comparison::cheeger_eigen_lower(h.value, lambda_f.value);
    Ok(InequalityRecord::new(
        "cheeger-eigenvalue-lower",
        "h^2 / (4 lambda_F^2) <= lambda1",
        bound,
        lambda1.value,
        slack,
        Side::Lhs,
        Hardness::Hard,
        vec![Operand::new("lambda1", lambda1), Operand::new("h", h), Operand::new("lambda_F", lambda_f)],
    ))
}

fn bound_operands(b: &BoundInputs) -> Vec<Operand> {
    vec![
        Operand::new("k", b.k),
        Operand::new("Lambda_F", b.uniformity),
        Operand::new("lambda_F", b.reversibility),
        Operand::new("volume", b.volume),
        Operand::new("diameter", b.diameter),
    ]
}

/// `croke ≤ h ≤ h_ub`: the sweep value must bound `h` from above.
pub fn croke_cheeger(inputs: &BoundInputs, h: Option<Tagged>) -> Result<InequalityRecord> {
    let h = require(h, "h_ub")?;
    if !matches!(h.provenance, Provenance::Exact | Provenance::UpperBound) {
        return Err(FinslerError::DirectionViolation(format!(
            "checking a lower bound on h needs h exact or from above, got {:?}",
            h.provenance
        )));
    }
    let croke = comparison::croke_cheeger_lower(inputs)?;
    let mut ops = bound_operands(inputs);
    ops.push(Operand::new("h", h));
    Ok(InequalityRecord::new(
        "croke-cheeger-lower",
        "(n-1) mu(M) / (2 vol(S^{n-2}) Lambda_F^{4n+1/2} diam int_0^diam s_k^{n-1}) <= h",
        croke,
        h.value,
        0.0,
        Side::Rhs,
        Hardness::Hard,
        ops,
    ))
}

/// `yau ≤ λ₁ (1 + slack)`.
pub fn yau_eigen(inputs: &BoundInputs, lambda1: Option<Tagged>, slack: f64) -> Result<InequalityRecord> {
    let lambda1 = require(lambda1, "lambda1")?;
    let yau = comparison::yau_eigen_lower(inputs)?;
    let mut ops = bound_operands(inputs);
    ops.push(Operand::new("lambda1", lambda1));
    Ok(InequalityRecord::new(
        "yau-eigenvalue-lower",
        "((n-1) mu(M) / (4 vol(S^{n-2}) Lambda_F^{4n+1} diam int_0^diam s_k^{n-1}))^2 <= lambda1",
        yau,
        lambda1.value,
        slack,
        Side::Rhs,
        Hardness::Hard,
        ops,
    ))
}

/// `λ₁(M) ≤ λ_F² max{λ₁(D₁), λ₁(D₂)}` for disjoint `D₁, D₂`.
pub fn minimax(lambda1: Tagged, lambda_f: Tagged, d1: Tagged, d2: Tagged, slack: f64) -> InequalityRecord {
    InequalityRecord::new(
        "minimax",
        "lambda1(M) <= lambda_F^2 max(lambda1(D1), lambda1(D2))",
        lambda1.value,
        lambda_f.value * lambda_f.value * d1.value.max(d2.value),
        slack,
        Side::Rhs,
        Hardness::Hard,
        vec![
            Operand::new("lambda1", lambda1),
            Operand::new("lambda_F", lambda_f),
            Operand::new("lambda1_D1", d1),
            Operand::new("lambda1_D2", d2),
        ],
    )
}

/// `|C · λ₁(C F²) / λ₁(F²) − 1| ≤ tol` or `|√C · h(C F²) / h(F²) − 1| ≤ tol`.
pub fn scaling(name: &str, c: f64, power: f64, base: Tagged, scaled: Tagged, tol: f64) -> InequalityRecord {
    let deviation = (scaled.value * c.powf(power) / base.value - 1.0).abs();
    InequalityRecord::new(
        name,
        "|C^p q(C F^2) / q(F^2) - 1| <= tol",
        deviation,
        tol,
        0.0,
        Side::Rhs,
        Hardness::Hard,
        vec![Operand::new("base", base), Operand::new("scaled", scaled), Operand::new("C", Tagged::exact(c))],
    )
}

/// `λ₁(α)/(1+b)² ≤ λ₁(F) ≤ λ₁(α)/(1−b)²` for `F = α + β`, `‖β‖_α = b`.
pub fn randers_sandwich(lambda_alpha: Tagged, b: f64, lambda1: Tagged, slack: f64) -> [InequalityRecord; 2] {
    let ops = vec![
        Operand::new("lambda1_alpha", lambda_alpha),
        Operand::new("b", Tagged::exact(b)),
        Operand::new("lambda1", lambda1),
    ];
    [
        InequalityRecord::new(
            "randers-sandwich-lower",
            "lambda1(alpha) / (1+b)^2 <= lambda1(F)",
            lambda_alpha.value / ((1.0 + b) * (1.0 + b)),
            lambda1.value,
            slack,
            Side::Lhs,
            Hardness::Hard,
            ops.clone(),
        ),
        InequalityRecord::new(
            "randers-sandwich-upper",
            "lambda1(F) <= lambda1(alpha) / (1-b)^2",
            lambda1.value,
            lambda_alpha.value / ((1.0 - b) * (1.0 - b)),
            slack,
            Side::Rhs,
            Hardness::Hard,
            ops,
        ),
    ]
}

/// `λ₁ ≤ C (δ h + h²)` with a caller-supplied constant; never hard.
pub fn buser_form(lambda1: Tagged, delta: Tagged, h: Tagged, c: f64) -> InequalityRecord {
    InequalityRecord::new(
        "buser-form",
        "lambda1 <= C (delta h + h^2)",
        lambda1.value,
        comparison::buser_rhs(delta.value, h.value, c),
        0.0,
        Side::Rhs,
        Hardness::Soft,
        vec![
            Operand::new("lambda1", lambda1),
            Operand::new("delta", delta),
            Operand::new("h", h),
            Operand::new("C", Tagged::exact(c)),
        ],
    )
}

/// Relative gap of an integral identity against a tolerance; never hard.
pub fn identity_gap(name: &str, statement: &str, gap: f64, tol: f64) -> InequalityRecord {
    InequalityRecord::new(name, statement, gap, tol, 0.0, Side::Rhs, Hardness::Soft, vec![])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_bound_h_is_refused_for_the_lower_eigenvalue_bound() {
        let r = cheeger_eigen_lower(
            Some(Tagged::estimate(1.0)),
            Some(Tagged::new(0.6, Provenance::UpperBound)),
            Some(Tagged::exact(1.0)),
            0.02,
        );
        assert!(matches!(r, Err(FinslerError::DirectionViolation(_))));
        let ok = cheeger_eigen_lower(
            Some(Tagged::estimate(1.0)),
            Some(Tagged::exact(2.0 / std::f64::consts::PI)),
            Some(Tagged::exact(1.0)),
            0.02,
        )
        .unwrap();
        assert!(ok.satisfied && ok.margin > 0.8);
    }

    #[test]
    fn lower_bound_h_is_refused_for_croke_check() {
        let b = BoundInputs {
            n: 2,
            k: Tagged::estimate(0.0),
            uniformity: Tagged::exact(1.0),
            reversibility: Tagged::exact(1.0),
            volume: Tagged::exact(1.0),
            diameter: Tagged::exact(1.0),
        };
        let r = croke_cheeger(&b, Some(Tagged::new(1.0, Provenance::LowerBound)));
        assert!(matches!(r, Err(FinslerError::DirectionViolation(_))));
    }

    #[test]
    fn missing_operand_is_reported() {
        let r = cheeger_eigen_lower(None, Some(Tagged::exact(1.0)), Some(Tagged::exact(1.0)), 0.0);
        assert!(matches!(r, Err(FinslerError::IncompleteVerification(_))));
    }

    #[test]
    fn slack_sides() {
        let a = InequalityRecord::new("a", "", 1.01, 1.0, 0.02, Side::Lhs, Hardness::Hard, vec![]);
        assert!(a.satisfied);
        let b = InequalityRecord::new("b", "", 1.03, 1.0, 0.02, Side::Rhs, Hardness::Hard, vec![]);
        assert!(!b.satisfied && b.is_hard_failure());
    }
}
