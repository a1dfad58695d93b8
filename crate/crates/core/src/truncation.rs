//! Truncation policy and the certified error ledger.
//!
//! Everything the finite implementation drops — oversized supports,
//! sub-floor coefficients, series tails — is accounted here, in kappa-norm
//! units at the kappa current when the drop happened and as an
//! operator-norm bound (`sites * ||.||_0`). Dropped norms are recorded with
//! the per-string l1 bound, which is exact per string and a certified upper
//! bound for sums; this keeps the ledger valid even for supports too large
//! to densify.

use serde::{Deserialize, Serialize};

use crate::algebra::{Accumulator, ExtensiveOperator};
use crate::{Error, Result};

/// What [`truncate`] is allowed to drop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Maximum support size retained.
    pub support_cap: usize,
    /// Relative coefficient floor: strings with `|c| < coeff_floor * scale`
    /// are dropped, where `scale = max(1, largest |c| in the operator)`.
    pub coeff_floor: f64,
    /// Relative tolerance for conjugation-series tails.
    pub series_tol: f64,
}

impl TruncationPolicy {
    pub fn new(support_cap: usize, coeff_floor: f64, series_tol: f64) -> Result<Self> {
        if coeff_floor < 0.0 {
            return Err(Error::InvalidParams("coeff_floor must be >= 0".into()));
        }
        if !series_tol.is_finite() || series_tol <= 0.0 {
            return Err(Error::InvalidParams("series_tol must be > 0".into()));
        }
        if support_cap == 0 {
            return Err(Error::InvalidParams("support_cap must be >= 1".into()));
        }
        Ok(TruncationPolicy {
            support_cap,
            coeff_floor,
            series_tol,
        })
    }

    /// Policy that keeps everything (used by tests and exact small runs).
    pub fn keep_all(max_support: usize) -> Self {
        TruncationPolicy {
            support_cap: max_support,
            coeff_floor: 0.0,
            series_tol: 1e-12,
        }
    }

    /// Validate against the operator the run starts from.
    pub fn validate_for(&self, input_max_support: usize) -> Result<()> {
        if self.support_cap < input_max_support {
            return Err(Error::InvalidParams(format!(
                "support_cap {} below the input Hamiltonian's largest support {}",
                self.support_cap, input_max_support
            )));
        }
        Ok(())
    }
}

/// One recorded drop.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerEntry {
    /// Where the drop happened (step and operation).
    pub label: String,
    /// Kappa at drop time.
    pub kappa: f64,
    /// Kappa-norm upper bound of the dropped contribution.
    pub kappa_norm_dropped: f64,
    /// Operator-norm upper bound (`sites * ||dropped||_0`).
    pub op_norm_bound: f64,
}

/// Certified bookkeeping of everything dropped during a run.
#[derive(Clone, Debug, Serialize)]
pub struct ErrorLedger {
    sites: usize,
    entries: Vec<LedgerEntry>,
    total_kappa: f64,
    total_op: f64,
    /// False once an uncertified (research-mode empirical) bound is logged.
    certified: bool,
}

impl ErrorLedger {
    pub fn new(sites: usize) -> Self {
        ErrorLedger {
            sites,
            entries: Vec::new(),
            total_kappa: 0.0,
            total_op: 0.0,
            certified: true,
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn record(&mut self, label: impl Into<String>, kappa: f64, kappa_norm: f64, op_bound: f64) {
        if kappa_norm == 0.0 && op_bound == 0.0 {
            return;
        }
        self.total_kappa += kappa_norm;
        self.total_op += op_bound;
        self.entries.push(LedgerEntry {
            label: label.into(),
            kappa,
            kappa_norm_dropped: kappa_norm,
            op_norm_bound: op_bound,
        });
    }

    /// Record a dropped operator, bounding its norms with l1 accounting.
    pub fn record_dropped(
        &mut self,
        label: impl Into<String>,
        kappa: f64,
        dropped: &ExtensiveOperator,
        charge_scale: f64,
    ) {
        if dropped.is_zero() {
            return;
        }
        let kn = dropped.kappa_norm_l1(kappa) * charge_scale;
        let op = dropped.kappa_norm_l1(0.0) * self.sites as f64 * charge_scale;
        self.record(label, kappa, kn, op);
    }

    pub fn mark_uncertified(&mut self) {
        self.certified = false;
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Total dropped kappa-norm (valid at any kappa at or below the drop
    /// kappas, by monotonicity).
    pub fn total_kappa_norm(&self) -> f64 {
        self.total_kappa
    }

    /// Total operator-norm bound.
    pub fn total_op_bound(&self) -> f64 {
        self.total_op
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Split an operator into (retained, dropped) per the policy.
pub(crate) fn split_by_policy(
    op: &ExtensiveOperator,
    policy: &TruncationPolicy,
) -> (ExtensiveOperator, ExtensiveOperator) {
    let scale = op.max_abs_coeff().max(1.0);
    let floor = policy.coeff_floor * scale;
    let mut keep = Accumulator::new();
    let mut drop = Accumulator::new();
    for s in op.strings() {
        if s.pattern.len() > policy.support_cap || s.coeff.norm() < floor {
            drop.add(s.pattern, s.coeff);
        } else {
            keep.add(s.pattern, s.coeff);
        }
    }
    (keep.into_operator(), drop.into_operator())
}

/// Apply the truncation policy; dropped weight is charged to the ledger at
/// `kappa_current`.
pub fn truncate(
    op: &ExtensiveOperator,
    policy: &TruncationPolicy,
    kappa_current: f64,
    ledger: &mut ErrorLedger,
) -> ExtensiveOperator {
    truncate_scaled(op, policy, kappa_current, ledger, "truncate", 1.0)
}

/// Truncation with a charge multiplier, used inside series evaluation where
/// a drop at order `j` also removes its higher-order descendants.
pub(crate) fn truncate_scaled(
    op: &ExtensiveOperator,
    policy: &TruncationPolicy,
    kappa_current: f64,
    ledger: &mut ErrorLedger,
    label: &str,
    charge_scale: f64,
) -> ExtensiveOperator {
    let (keep, dropped) = split_by_policy(op, policy);
    ledger.record_dropped(label, kappa_current, &dropped, charge_scale);
    keep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{LadderString, Letter, Pattern};
    use crate::lattice::Site;
    use num_complex::Complex64;

    fn one_string(coeff: f64, sites: &[i32]) -> ExtensiveOperator {
        let letters = sites.iter().map(|&x| (Site::chain(x), Letter::Z)).collect();
        ExtensiveOperator::from_strings([LadderString::new(
            Pattern::new(letters).unwrap(),
            Complex64::new(coeff, 0.0),
        )])
    }

    #[test]
    fn no_op_policy_keeps_everything() {
        let op = one_string(1.0, &[0]).add(&one_string(1e-30, &[1, 2]));
        let policy = TruncationPolicy::keep_all(8);
        let mut ledger = ErrorLedger::new(6);
        let out = truncate(&op, &policy, 1.0, &mut ledger);
        assert_eq!(out.num_strings(), 2);
        assert!(ledger.is_empty());
    }

    #[test]
    fn floor_drops_and_charges_ledger() {
        let op = one_string(1e-15, &[0]);
        let policy = TruncationPolicy::new(8, 1e-12, 1e-12).unwrap();
        let mut ledger = ErrorLedger::new(6);
        let out = truncate(&op, &policy, 1.0, &mut ledger);
        assert!(out.is_zero());
        assert_eq!(ledger.len(), 1);
        // kappa-norm of the dropped single-site string at kappa = 1: |c| e^1
        let want = 1e-15 * std::f64::consts::E;
        assert!((ledger.total_kappa_norm() - want).abs() < 1e-25);
        assert!((ledger.total_op_bound() - 6.0 * 1e-15).abs() < 1e-25);
    }

    #[test]
    fn support_cap_drops() {
        let op = one_string(1.0, &[0]).add(&one_string(0.5, &[0, 1, 2]));
        let policy = TruncationPolicy::new(2, 0.0, 1e-12).unwrap();
        let mut ledger = ErrorLedger::new(3);
        let out = truncate(&op, &policy, 0.5, &mut ledger);
        assert_eq!(out.num_strings(), 1);
        assert_eq!(out.max_support(), 1);
        assert!((ledger.total_op_bound() - 3.0 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(4, -1.0, 1e-12).is_err());
        assert!(TruncationPolicy::new(4, 0.0, 0.0).is_err());
        let p = TruncationPolicy::new(2, 0.0, 1e-12).unwrap();
        assert!(p.validate_for(3).is_err());
        assert!(p.validate_for(2).is_ok());
    }
}
