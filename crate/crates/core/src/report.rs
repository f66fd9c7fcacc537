//! Statistics of the three-phase deployment (no delay, static delay,
//! adaptive delay), computed from its published suggestion counts.

use std::fmt::Write as _;

use crate::evalstats::{
    blind_ratio_tests, blind_ratios, calls_per_accept, cost_savings, fisher_exact_2x2,
    relative_reduction, two_proportion_z, wald_estimate, BlindRatios, PhaseCounts, RateEstimate,
    TestResult, Usd, Z_95,
};
use crate::telemetry::Phase;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePhase {
    pub phase: Phase,
    pub label: &'static str,
    pub counts: PhaseCounts,
    /// Decimals the blind-per-reject percentage was published with.
    pub per_reject_digits: usize,
}

pub const DEPLOYMENT: [ReferencePhase; 3] = [
    ReferencePhase {
        phase: Phase::NoDelay,
        label: "no_delay",
        counts: PhaseCounts {
            n_total: 5460,
            k_accepted: 267,
            n_blind: 453,
        },
        per_reject_digits: 1,
    },
    ReferencePhase {
        phase: Phase::Static,
        label: "static",
        counts: PhaseCounts {
            n_total: 1225,
            k_accepted: 189,
            n_blind: 13,
        },
        per_reject_digits: 1,
    },
    ReferencePhase {
        phase: Phase::Adaptive,
        label: "adaptive",
        counts: PhaseCounts {
            n_total: 1032,
            k_accepted: 192,
            n_blind: 3,
        },
        per_reject_digits: 2,
    },
];

pub const COST_TOKENS_PER_CALL: u64 = 1250;
pub const COST_PRICE_PER_1K_MICROS: i64 = 400;
pub const COST_ACCEPTED_TARGET: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStats {
    pub label: &'static str,
    pub counts: PhaseCounts,
    pub acceptance: RateEstimate,
    pub blind: BlindRatios,
    pub calls_per_accept: f64,
    pub per_reject_digits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub name: String,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentReport {
    pub phases: Vec<PhaseStats>,
    pub tests: Vec<Comparison>,
    pub reduction_first_to_last: f64,
    pub savings: Usd,
}

/// Every statistic derivable from the deployment counts.
pub fn deployment_report() -> DeploymentReport {
    let phases: Vec<PhaseStats> = DEPLOYMENT
        .iter()
        .map(|p| PhaseStats {
            label: p.label,
            counts: p.counts,
            acceptance: wald_estimate(p.counts.n_total, p.counts.k_accepted, Z_95)
                .expect("non-empty phase"),
            blind: blind_ratios(&p.counts).expect("phase has rejections"),
            calls_per_accept: calls_per_accept(&p.counts).expect("phase has accepts"),
            per_reject_digits: p.per_reject_digits,
        })
        .collect();

    let [p1, p2, p3] = DEPLOYMENT.map(|p| p.counts);
    let z = |a: &PhaseCounts, b: &PhaseCounts| {
        two_proportion_z(a.n_total, a.k_accepted, b.n_total, b.k_accepted).expect("valid counts")
    };
    let tests = vec![
        Comparison {
            name: "acceptance no_delay -> static".into(),
            result: z(&p1, &p2),
        },
        Comparison {
            name: "acceptance static -> adaptive".into(),
            result: z(&p2, &p3),
        },
        Comparison {
            name: "blind/reject no_delay -> static".into(),
            result: blind_ratio_tests(&p1, &p2).expect("valid counts"),
        },
        Comparison {
            name: "blind/reject static -> adaptive".into(),
            result: blind_ratio_tests(&p2, &p3).expect("valid counts"),
        },
        Comparison {
            name: "blind/reject static -> adaptive (fisher)".into(),
            result: fisher_exact_2x2(
                p2.n_blind,
                p2.n_rejected() - p2.n_blind,
                p3.n_blind,
                p3.n_rejected() - p3.n_blind,
            )
            .expect("non-empty table"),
        },
    ];

    DeploymentReport {
        phases,
        tests,
        reduction_first_to_last: relative_reduction(&p1, &p3).expect("phases have accepts"),
        savings: cost_savings(
            &p1,
            &p3,
            COST_ACCEPTED_TARGET,
            COST_TOKENS_PER_CALL,
            Usd::from_micros(COST_PRICE_PER_1K_MICROS),
        )
        .expect("phases have accepts"),
    }
}

fn format_p(p: f64) -> String {
    if p < 1e-3 {
        format!("{p:.1e}")
    } else {
        format!("{p:.3}")
    }
}

impl DeploymentReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pct = |x: f64| x * 100.0;
        out.push_str("Acceptance rates (Wald 95% CI)\n");
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>5} {:>8} {:>6}  ci_95_%",
            "phase", "n", "k", "rate_%", "se_%"
        );
        for p in &self.phases {
            let a = &p.acceptance;
            let _ = writeln!(
                out,
                "{:<10} {:>6} {:>5} {:>8.2} {:>6.2}  [{:.1}, {:.1}]",
                p.label,
                p.counts.n_total,
                p.counts.k_accepted,
                pct(a.rate),
                pct(a.se),
                pct(a.ci_low),
                pct(a.ci_high)
            );
        }

        out.push_str("\nBlind rejections\n");
        let _ = writeln!(
            out,
            "{:<10} {:>8} {:>5} {:>13} {:>14}",
            "phase", "rejected", "blind", "per_reject_%", "per_suggest_%"
        );
        for p in &self.phases {
            let _ = writeln!(
                out,
                "{:<10} {:>8} {:>5} {:>13.*} {:>14.1}",
                p.label,
                p.counts.n_rejected(),
                p.counts.n_blind,
                p.per_reject_digits,
                pct(p.blind.per_reject),
                pct(p.blind.per_suggest)
            );
        }

        out.push_str("\nSignificance tests (two-sided)\n");
        for t in &self.tests {
            match t.result.z {
                Some(z) => {
                    let _ = writeln!(
                        out,
                        "{:<42} z={:>7.2}  p={}",
                        t.name,
                        z,
                        format_p(t.result.p_value)
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:<42} {:>9}  p={}",
                        t.name,
                        "",
                        format_p(t.result.p_value)
                    );
                }
            }
        }

        out.push_str("\nEfficiency\n");
        for p in &self.phases {
            let _ = writeln!(
                out,
                "calls_per_accept {:<10} {:.1}",
                p.label, p.calls_per_accept
            );
        }
        let _ = writeln!(
            out,
            "reduction no_delay -> adaptive {:.1}%",
            pct(self.reduction_first_to_last)
        );
        let _ = writeln!(
            out,
            "savings per {COST_ACCEPTED_TARGET} accepted ({COST_TOKENS_PER_CALL} tokens/call, {}/1k tokens): {:.2}",
            Usd::from_micros(COST_PRICE_PER_1K_MICROS),
            self.savings
        );
        out
    }

    /// Tab-separated `section, key, value` rows at full precision (shortest
    /// round-tripping form, exponent notation for extreme magnitudes).
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("section\tkey\tvalue\n");
        for p in &self.phases {
            let rows = [
                ("acceptance_rate", p.acceptance.rate),
                ("acceptance_se", p.acceptance.se),
                ("acceptance_ci_low", p.acceptance.ci_low),
                ("acceptance_ci_high", p.acceptance.ci_high),
                ("blind_per_reject", p.blind.per_reject),
                ("blind_per_suggest", p.blind.per_suggest),
                ("calls_per_accept", p.calls_per_accept),
            ];
            for (k, v) in rows {
                let _ = writeln!(out, "{}\t{k}\t{v:?}", p.label);
            }
        }
        for t in &self.tests {
            if let Some(z) = t.result.z {
                let _ = writeln!(out, "test\t{} z\t{z:?}", t.name);
            }
            let _ = writeln!(out, "test\t{} p\t{:?}", t.name, t.result.p_value);
        }
        let _ = writeln!(
            out,
            "efficiency\treduction\t{:?}",
            self.reduction_first_to_last
        );
        let _ = writeln!(
            out,
            "efficiency\tsavings_usd\t{}",
            self.savings.as_dollars()
        );
        out
    }
}
