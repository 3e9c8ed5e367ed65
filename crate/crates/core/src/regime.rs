//! Checks of the parameter hierarchy the reduction relies on, and of the
//! decoherence budget.

use serde::{Deserialize, Serialize};

use crate::effective::derive_couplings;
use crate::params::PhysicalParams;

/// Slack on threshold comparisons so that ratios sitting exactly on a
/// threshold are not lost to rounding.
const COMPARISON_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeThresholds {
    /// `x ≫ y` means `x/y ≥ r_much`.
    pub r_much: f64,
    /// `x ∼ y` means `x/y ∈ [1/r_sim, r_sim]`.
    pub r_sim: f64,
    /// Relative tolerance on `g₁²/Δ₁ = g₂²/Δ₂`.
    pub cond1_tolerance: f64,
    /// `γ` must stay below the budget divided by this.
    pub budget_margin: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        Self {
            r_much: 10.0,
            r_sim: 3.0,
            cond1_tolerance: 1e-3,
            budget_margin: 10.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `numerator/denominator ≥ threshold`.
    MuchGreater,
    /// `numerator/denominator ∈ [1/threshold, threshold]`.
    Similar,
    /// `numerator ≥ denominator`.
    AtLeast,
    /// `numerator/denominator ≤ threshold`.
    AtMost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub name: String,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub ok: bool,
}

impl RatioCheck {
    fn new(name: String, numerator: f64, denominator: f64, relation: Relation, threshold: f64) -> Self {
        let ratio = numerator / denominator;
        let ok = match relation {
            Relation::MuchGreater => ratio >= threshold * (1.0 - COMPARISON_SLACK),
            Relation::AtLeast if denominator == 0.0 => numerator >= 0.0,
            Relation::AtLeast => ratio >= threshold * (1.0 - COMPARISON_SLACK),
            Relation::Similar => {
                ratio >= (1.0 - COMPARISON_SLACK) / threshold && ratio <= threshold * (1.0 + COMPARISON_SLACK)
            }
            Relation::AtMost => ratio <= threshold * (1.0 + COMPARISON_SLACK),
        };
        Self {
            name,
            numerator,
            denominator,
            ratio,
            threshold,
            relation,
            ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub condition1_ok: bool,
    pub condition2_ok: bool,
    pub condition3_ok: bool,
    pub budget_ok: bool,
    pub ratios: Vec<RatioCheck>,
    pub messages: Vec<String>,
}

impl RegimeReport {
    pub fn all_ok(&self) -> bool {
        self.condition1_ok && self.condition2_ok && self.condition3_ok && self.budget_ok
    }

    /// Names of the failed checks.
    pub fn violations(&self) -> Vec<&str> {
        self.ratios.iter().filter(|r| !r.ok).map(|r| r.name.as_str()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceBudget {
    pub ok: bool,
    /// `γ`.
    pub lhs: f64,
    /// `min_j J/(2N) (Δ_j / (√(M/2) g_j))²`.
    pub rhs: f64,
}

pub fn decoherence_budget(p: &PhysicalParams, n_cavities: usize, margin: f64) -> DecoherenceBudget {
    let rhs = [(p.delta1, 1), (p.delta2, 2)]
        .iter()
        .map(|&(d, j)| {
            let g = p.collective_coupling(j);
            if g == 0.0 {
                f64::INFINITY
            } else {
                p.j / (2.0 * n_cavities as f64) * (d / g).powi(2)
            }
        })
        .fold(f64::INFINITY, f64::min);
    DecoherenceBudget {
        ok: p.gamma <= rhs / margin,
        lhs: p.gamma,
        rhs,
    }
}

fn describe(r: &RatioCheck) -> String {
    let rel = match r.relation {
        Relation::MuchGreater => format!("needs ratio >= {}", r.threshold),
        Relation::Similar => format!("needs ratio within [1/{0}, {0}]", r.threshold),
        Relation::AtLeast => "needs ratio >= 1".to_string(),
        Relation::AtMost => format!("needs ratio <= {}", r.threshold),
    };
    format!("{} violated: {} / {} = {:.6e} ({rel})", r.name, r.numerator, r.denominator, r.ratio)
}

/// Evaluates every inequality of the regime. Never fails; problems are
/// reported as flags and messages.
pub fn check_conditions(p: &PhysicalParams, t: &RegimeThresholds, n_cavities: usize) -> RegimeReport {
    use Relation::*;
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    let mut c3 = Vec::new();

    let s1 = p.g1 * p.g1 / p.delta1;
    let s2 = p.g2 * p.g2 / p.delta2;
    c1.push(RatioCheck::new(
        "cond1: g1^2/Delta1 = g2^2/Delta2".into(),
        (s1 - s2).abs(),
        s1.abs().max(s2.abs()),
        AtMost,
        t.cond1_tolerance,
    ));
    if s1 == s2 {
        // 0/0 when both vanish; equal is equal.
        c1[0].ratio = 0.0;
        c1[0].ok = true;
    }

    for (j, delta) in [(1usize, p.delta1), (2, p.delta2)] {
        let g = p.collective_coupling(j);
        c2.push(RatioCheck::new(
            format!("cond2: |Delta_{j}| >> sqrt(M/2) g_{j}"),
            delta.abs(),
            g,
            MuchGreater,
            t.r_much,
        ));
        c2.push(RatioCheck::new(
            format!("cond2: |Delta_1 - Delta_2| >> sqrt(M/2) g_{j}"),
            (p.delta1 - p.delta2).abs(),
            g,
            MuchGreater,
            t.r_much,
        ));
        c2.push(RatioCheck::new(
            format!("cond2: sqrt(M/2) g_{j} >> J"),
            g,
            p.j,
            MuchGreater,
            t.r_much,
        ));
    }
    for (k, w) in [(1, p.omega1), (2, p.omega2), (3, p.omega3), (4, p.omega4)] {
        if k <= 2 || w.norm() > 0.0 {
            c2.push(RatioCheck::new(
                format!("cond2: J >= |Omega_{k}|"),
                p.j,
                w.norm(),
                AtLeast,
                1.0,
            ));
        }
    }

    let lambda = p.atoms_per_cavity as f64 * s1;
    let w = p.omega.abs();
    let lp = (lambda + p.omega).abs();
    let lm = (lambda - p.omega).abs();
    let sim = [
        ("lambda", "|lambda+omega|", lambda, lp),
        ("lambda", "|lambda-omega|", lambda, lm),
        ("lambda", "|omega|", lambda, w),
        ("|lambda+omega|", "|omega|", lp, w),
        ("|lambda-omega|", "|omega|", lm, w),
    ];
    for (na, nb, a, b) in sim {
        c3.push(RatioCheck::new(format!("cond3: {na} ~ {nb}"), a, b, Similar, t.r_sim));
    }
    c3.push(RatioCheck::new(
        "cond3: |omega| >> 2J".into(),
        w,
        2.0 * p.j,
        MuchGreater,
        t.r_much,
    ));
    if p.extended_active() {
        match derive_couplings(p) {
            Ok(d) => {
                let ld = d.lambda_minus_delta;
                let extra = [
                    ("|lambda-delta|", "|omega|", ld.abs(), w),
                    ("|lambda-delta+omega|", "|omega|", (ld + p.omega).abs(), w),
                    ("|lambda-delta-omega|", "|omega|", (ld - p.omega).abs(), w),
                ];
                for (na, nb, a, b) in extra {
                    // The extended frequencies only need to stay well separated
                    // from zero on the scale of ω; no upper bound is implied.
                    c3.push(RatioCheck::new(format!("cond3: {na} ~ {nb}"), a, b, AtLeast, 1.0 / t.r_sim));
                }
            }
            Err(e) => {
                c3.push(RatioCheck::new(format!("cond3: distinct frequencies ({e})"), 0.0, 1.0, AtLeast, 1.0));
            }
        }
    }

    let budget = decoherence_budget(p, n_cavities.max(1), t.budget_margin);
    let budget_check = RatioCheck::new(
        "budget: gamma << J/(2N) (Delta_j/(sqrt(M/2) g_j))^2".into(),
        budget.lhs,
        budget.rhs,
        AtMost,
        1.0 / t.budget_margin,
    );
    let budget_check = RatioCheck {
        ok: budget.ok,
        ..budget_check
    };

    let all_ok = |v: &[RatioCheck]| v.iter().all(|r| r.ok);
    let condition1_ok = all_ok(&c1);
    let condition2_ok = all_ok(&c2);
    let condition3_ok = all_ok(&c3);
    let budget_ok = budget_check.ok;
    let mut ratios = c1;
    ratios.extend(c2);
    ratios.extend(c3);
    ratios.push(budget_check);
    let messages = ratios.iter().filter(|r| !r.ok).map(describe).collect();
    RegimeReport {
        condition1_ok,
        condition2_ok,
        condition3_ok,
        budget_ok,
        ratios,
        messages,
    }
}
