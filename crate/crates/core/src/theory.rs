//! Convergence bounds with explicit constants, stepsize constraints, and the
//! data-dependent outer learning rate recommendation.

use serde::{Deserialize, Serialize};

use crate::diagnostics::gradient_stats;
use crate::engine::StepRound;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    /// Smoothness constant `L`.
    pub smoothness: f64,
    /// `D = ||x_0 - x*||`.
    pub distance: f64,
    pub sigma: f64,
    pub nodes: usize,
    pub local_steps: usize,
    pub rounds: usize,
    pub eta: f64,
    pub gamma: f64,
    #[serde(default)]
    pub mu: Option<f64>,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let positive = |key, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(key, "must be positive and finite"))
            }
        };
        positive("eta", self.eta)?;
        positive("gamma", self.gamma)?;
        positive("smoothness", self.smoothness)?;
        if !(self.distance >= 0.0 && self.distance.is_finite()) {
            return Err(Error::invalid("distance", "must be finite and nonnegative"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "must be finite and nonnegative"));
        }
        for (key, n) in [
            ("nodes", self.nodes),
            ("local_steps", self.local_steps),
            ("rounds", self.rounds),
        ] {
            if n == 0 {
                return Err(Error::invalid(key, "must be at least 1"));
            }
        }
        Ok(())
    }

    fn counts(&self) -> (f64, f64, f64) {
        (self.nodes as f64, self.local_steps as f64, self.rounds as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTerm {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub value: f64,
    pub terms: Vec<BoundTerm>,
    pub constraint_ok: bool,
    /// Smallest margin over the stepsize constraints; negative when violated.
    pub constraint_slack: f64,
}

impl BoundReport {
    fn new(terms: Vec<BoundTerm>, constraint_slack: f64) -> Self {
        Self {
            value: terms.iter().map(|t| t.value).sum(),
            terms,
            constraint_ok: constraint_slack >= 0.0,
            constraint_slack,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

fn term(name: &'static str, value: f64) -> BoundTerm {
    BoundTerm { name, value }
}

fn pos_part(x: f64) -> f64 {
    x.max(0.0)
}

/// Bound on `E f(avg iterate) - f*` for the plain outer optimizer, valid when
/// `eta L (1 + (gamma - 1)_+ H) <= 1/4`.
pub fn thm1_bound(inp: &BoundInputs) -> Result<BoundReport> {
    inp.validate()?;
    let (m, h, r) = inp.counts();
    let BoundInputs {
        smoothness: l,
        distance: d,
        sigma,
        eta,
        gamma,
        ..
    } = *inp;
    let s2 = sigma * sigma;
    let terms = vec![
        term("optimization", 2.0 * d * d / (gamma * eta * r * h)),
        term("drift", 8.0 * l * eta * eta * s2 * h),
        term("noise", 2.0 * eta * (1.0 + pos_part(gamma - 1.0)) * s2 / m),
    ];
    let slack = 0.25 - eta * l * (1.0 + pos_part(gamma - 1.0) * h);
    Ok(BoundReport::new(terms, slack))
}

/// Bound for heavy-ball outer momentum `mu`.
pub fn thm2_bound(inp: &BoundInputs) -> Result<BoundReport> {
    inp.validate()?;
    let mu = inp.mu.unwrap_or(0.0);
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::invalid("mu", "must lie in [0, 1)"));
    }
    let (m, h, r) = inp.counts();
    let BoundInputs {
        smoothness: l,
        distance: d,
        sigma,
        eta,
        gamma,
        ..
    } = *inp;
    let s2 = sigma * sigma;
    let effective = gamma / (1.0 - mu);
    let terms = vec![
        term("optimization", 4.0 * (1.0 - mu) * d * d / (eta * gamma * h * r)),
        term("drift", 16.0 * l * eta * eta * s2 * h),
        term("noise", 4.0 * eta * s2 / m * effective.max(1.0)),
        term("momentum", 8.0 * eta * gamma * mu * s2 / ((1.0 - mu) * m)),
    ];
    let first = 0.25 - eta * l * (1.0 + pos_part(effective - 1.0) * h);
    let second = 1.0 / 16.0 - eta * effective * mu * l * h;
    Ok(BoundReport::new(terms, first.min(second)))
}

/// Bound on `E f(u_R) - f*` for the accelerated outer optimizer, valid when
/// `2 L eta <= 1` and `gamma <= 1`.
pub fn thm3_bound(inp: &BoundInputs) -> Result<BoundReport> {
    inp.validate()?;
    let (m, h, r) = inp.counts();
    let BoundInputs {
        smoothness: l,
        distance: d,
        sigma,
        eta,
        gamma,
        ..
    } = *inp;
    let s2 = sigma * sigma;
    let terms = vec![
        term("optimization", 2.0 * d * d / (gamma * eta * r * r * h)),
        term("variance", r * l * eta * eta * s2 * h / (2.0 * m)),
        term("drift", r * l * l * eta.powi(3) * s2 * h * h / 2.0),
        term("noise", gamma * eta * s2 * r / (2.0 * m)),
    ];
    let slack = (1.0 - 2.0 * l * eta).min(1.0 - gamma);
    Ok(BoundReport::new(terms, slack))
}

/// Inner stepsize for the accelerated method at `gamma = 1`: the smallest of
/// `1/(2L)` and the three noise-balancing candidates.
pub fn corollary1_eta(l: f64, d: f64, sigma: f64, m: usize, h: usize, r: usize) -> f64 {
    let (m, h, r) = (m as f64, h as f64, r as f64);
    let cap = 1.0 / (2.0 * l);
    if sigma == 0.0 {
        return cap;
    }
    let s2 = sigma * sigma;
    let r3 = r * r * r;
    let candidates = [
        cap,
        (2.0 * m * d * d / (r3 * l * s2 * h * h)).cbrt(),
        (4.0 * d * d / (3.0 * r3 * l * l * s2 * h * h * h)).powf(0.25),
        (4.0 * m * d * d / (r3 * h * s2)).sqrt(),
    ];
    candidates.into_iter().fold(f64::INFINITY, f64::min)
}

/// Which closed form minimizes `g(x) = a/x + b x + |1 - x| c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prop2Case {
    /// `a >= b + c`: `x = sqrt(a / (b + c)) >= 1`.
    SumBranch,
    /// `b >= c` and `a <= b - c`: `x = sqrt(a / (b - c)) <= 1`.
    DifferenceBranch,
    /// Otherwise `x = 1`.
    Unit,
}

pub fn prop2_objective(x: f64, a: f64, b: f64, c: f64) -> f64 {
    a / x + b * x + (1.0 - x).abs() * c
}

/// Minimizer of `a/x + b x + |1 - x| c` over `x > 0`.
pub fn prop2_minimize(a: f64, b: f64, c: f64) -> Result<(f64, Prop2Case)> {
    for (key, v) in [("a", a), ("b", b), ("c", c)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(key, "must be finite and nonnegative"));
        }
    }
    if a == 0.0 && b == 0.0 && c == 0.0 {
        return Err(Error::DegenerateInput("g is identically zero"));
    }
    if b == 0.0 && c == 0.0 {
        return Err(Error::DegenerateInput("a/x has no minimizer"));
    }
    if a == 0.0 {
        if b > c {
            return Err(Error::DegenerateInput("infimum approached only as x -> 0"));
        }
        // g is constant on (0, 1] when b == c and minimized at 1 when b < c
        return Ok((1.0, Prop2Case::Unit));
    }
    if a >= b + c {
        Ok(((a / (b + c)).sqrt(), Prop2Case::SumBranch))
    } else if b >= c && a <= b - c {
        Ok(((a / (b - c)).sqrt(), Prop2Case::DifferenceBranch))
    } else {
        Ok((1.0, Prop2Case::Unit))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermReport {
    pub value: f64,
    pub terms: Vec<BoundTerm>,
}

/// The six data-dependent addends of the high-probability bound, with unit
/// leading constants. `log_factor` multiplies every addend except the
/// initial-distance one.
pub fn thm4_terms(steps: Option<&[StepRound]>, inp: &BoundInputs, log_factor: f64) -> Result<TermReport> {
    let steps = steps.ok_or(Error::MissingData("step-level records"))?;
    if steps.is_empty() || steps[0].avg_grads.is_empty() {
        return Err(Error::MissingData("step-level records"));
    }
    if !(log_factor > 0.0 && log_factor.is_finite()) {
        return Err(Error::invalid("log_factor", "must be positive and finite"));
    }
    let (eta, gamma, sigma, d) = (inp.eta, inp.gamma, inp.sigma, inp.distance);
    let stats = gradient_stats(steps)?;
    let r = steps.len() as f64;
    let h = steps[0].avg_grads.len() as f64;
    let m = steps[0].node_grad_norms[0].len() as f64;

    let avg_sq: f64 = steps
        .iter()
        .flat_map(|s| s.avg_grads.iter())
        .map(|g| g.norm_squared())
        .sum();
    let per_round_sq: f64 = stats.avg_norm_sums.iter().map(|s| s * s).sum();
    let max_node_sum = stats.node_norm_sums.iter().copied().fold(0.0, f64::max);
    let node_sq: f64 = steps
        .iter()
        .flat_map(|s| s.node_grad_norms.iter().flatten())
        .map(|n| n * n)
        .sum();

    let terms = vec![
        term("distance", d * d / (gamma * eta * r * h)),
        term("avg_gradients", log_factor * gamma * eta / (r * h) * avg_sq),
        term("noise", log_factor * gamma * eta * sigma * sigma),
        term(
            "outer_mismatch",
            log_factor * (1.0 - gamma).abs() * eta / (r * h) * per_round_sq,
        ),
        term("max_round", log_factor * eta / (gamma * h) * (max_node_sum / m).powi(2)),
        term("local_gradients", log_factor * eta * sigma * (node_sq / (m * r)).sqrt()),
    ];
    Ok(TermReport {
        value: terms.iter().map(|t| t.value).sum(),
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Recommended `gamma < 1`.
    NoiseDominated,
    Balanced,
    /// Recommended `gamma > 1`.
    OptimizationDominated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaRecommendation {
    pub gamma: f64,
    pub regime: Regime,
    pub case: Prop2Case,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub g1_rms: f64,
    pub g2_rms: f64,
}

/// Plugs RMS gradient norms of a step-level trace into the simplified bound,
/// groups it by its dependence on `gamma` and minimizes.
pub fn recommend_gamma(steps: Option<&[StepRound]>, inp: &BoundInputs) -> Result<GammaRecommendation> {
    let steps = steps.ok_or(Error::MissingData("step-level records"))?;
    inp.validate()?;
    let stats = gradient_stats(steps)?;
    let (_, h, r) = inp.counts();
    let (eta, sigma, d) = (inp.eta, inp.sigma, inp.distance);
    let (g1, g2) = (stats.g1_rms, stats.g2_rms);
    let a = d * d / (eta * r * h) + eta * h * g2 * g2;
    let b = eta * (g1 * g1 + sigma * sigma);
    let c = eta * h * g1 * g1;
    let (gamma, case) = prop2_minimize(a, b, c)?;
    let regime = if gamma < 1.0 {
        Regime::NoiseDominated
    } else if gamma > 1.0 {
        Regime::OptimizationDominated
    } else {
        Regime::Balanced
    };
    Ok(GammaRecommendation {
        gamma,
        regime,
        case,
        a,
        b,
        c,
        g1_rms: g1,
        g2_rms: g2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vector;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn inputs(l: f64, d: f64, sigma: f64, m: usize, h: usize, r: usize, eta: f64, gamma: f64) -> BoundInputs {
        BoundInputs {
            smoothness: l,
            distance: d,
            sigma,
            nodes: m,
            local_steps: h,
            rounds: r,
            eta,
            gamma,
            mu: None,
        }
    }

    #[test]
    fn thm1_examples() {
        let rep = thm1_bound(&inputs(1.0, 1.0, 1.0, 2, 4, 10, 0.05, 1.0)).unwrap();
        assert_relative_eq!(rep.value, 1.13, max_relative = 1e-12);
        assert!(rep.constraint_ok);
        assert_relative_eq!(rep.constraint_slack, 0.2, max_relative = 1e-12);

        let quiet = thm1_bound(&inputs(1.0, 2.0, 0.0, 2, 4, 10, 0.05, 1.5)).unwrap();
        let doubled = thm1_bound(&inputs(1.0, 2.0, 0.0, 2, 4, 20, 0.05, 1.5)).unwrap();
        assert_relative_eq!(quiet.value, 2.0 * 4.0 / (1.5 * 0.05 * 40.0), max_relative = 1e-14);
        assert_relative_eq!(doubled.value, quiet.value / 2.0, max_relative = 1e-14);

        let small_gamma = thm1_bound(&inputs(1.0, 1.0, 3.0, 4, 4, 10, 0.01, 0.7)).unwrap();
        assert_relative_eq!(
            small_gamma.term("noise").unwrap(),
            2.0 * 0.01 * 9.0 / 4.0,
            max_relative = 1e-14
        );

        assert_eq!(
            thm1_bound(&inputs(1.0, 1.0, 1.0, 1, 1, 1, 0.0, 1.0)).unwrap_err().key(),
            Some("eta")
        );
        assert_eq!(
            thm1_bound(&inputs(1.0, 1.0, 1.0, 1, 1, 1, 0.1, -1.0))
                .unwrap_err()
                .key(),
            Some("gamma")
        );
    }

    #[test]
    fn thm1_constraint_violation() {
        let rep = thm1_bound(&inputs(1.0, 1.0, 1.0, 2, 10, 10, 0.1, 2.0)).unwrap();
        assert!(!rep.constraint_ok);
        assert!(rep.constraint_slack < 0.0);
    }

    #[test]
    fn thm2_examples() {
        let mut inp = inputs(1.0, 1.0, 1.0, 1, 2, 10, 0.05, 0.5);
        inp.mu = Some(0.5);
        assert_relative_eq!(thm2_bound(&inp).unwrap().value, 4.48, max_relative = 1e-12);

        let zero = inputs(1.5, 0.7, 2.0, 3, 5, 7, 0.01, 1.3);
        let rep2 = thm2_bound(&zero).unwrap();
        let rep1 = thm1_bound(&zero).unwrap();
        assert_relative_eq!(rep2.value, 2.0 * rep1.value, max_relative = 1e-12);
        assert_eq!(rep2.term("momentum"), Some(0.0));

        let mut quiet = inputs(1.0, 1.0, 0.0, 1, 2, 10, 0.05, 0.5);
        quiet.mu = Some(0.3);
        assert_relative_eq!(
            thm2_bound(&quiet).unwrap().value,
            4.0 * 0.7 / (0.05 * 0.5 * 20.0),
            max_relative = 1e-14
        );

        inp.mu = Some(1.0);
        assert_eq!(thm2_bound(&inp).unwrap_err().key(), Some("mu"));
    }

    #[test]
    fn thm3_examples() {
        let rep = thm3_bound(&inputs(1.0, 1.0, 1.0, 2, 2, 4, 0.25, 1.0)).unwrap();
        assert_relative_eq!(rep.value, 0.75, max_relative = 1e-12);
        assert!(rep.constraint_ok);

        let a = thm3_bound(&inputs(1.0, 1.0, 0.0, 2, 2, 4, 0.25, 1.0)).unwrap();
        let b = thm3_bound(&inputs(1.0, 1.0, 0.0, 2, 2, 8, 0.25, 1.0)).unwrap();
        assert_relative_eq!(b.value, a.value / 4.0, max_relative = 1e-14);

        let huge_m = thm3_bound(&inputs(1.0, 1.0, 1.0, 1 << 40, 2, 4, 0.25, 1.0)).unwrap();
        assert!(huge_m.term("variance").unwrap() < 1e-10);
        assert!(huge_m.term("noise").unwrap() < 1e-10);
        assert_relative_eq!(huge_m.term("drift").unwrap(), 0.125, max_relative = 1e-14);

        assert!(
            !thm3_bound(&inputs(1.0, 1.0, 1.0, 2, 2, 4, 0.25, 1.5))
                .unwrap()
                .constraint_ok
        );
        assert!(
            !thm3_bound(&inputs(1.0, 1.0, 1.0, 2, 2, 4, 0.6, 1.0))
                .unwrap()
                .constraint_ok
        );
    }

    #[test]
    fn corollary1_examples() {
        assert_eq!(corollary1_eta(2.0, 1.0, 0.0, 1, 1, 8), 0.25);
        let expected = [
            0.5_f64,
            (2.0_f64 / 512.0).cbrt(),
            (4.0_f64 / (3.0 * 512.0)).powf(0.25),
            (4.0_f64 / 512.0).sqrt(),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(corollary1_eta(1.0, 1.0, 1.0, 1, 1, 8), expected, max_relative = 1e-15);

        let mut last = f64::INFINITY;
        for sigma in [10.0, 100.0, 1e3, 1e4] {
            let eta = corollary1_eta(1.0, 1.0, sigma, 4, 4, 16);
            assert!(eta < last && eta < 0.5);
            last = eta;
        }
    }

    #[test]
    fn prop2_examples() {
        assert_eq!(prop2_minimize(4.0, 1.0, 0.0).unwrap(), (2.0, Prop2Case::SumBranch));
        assert_eq!(prop2_minimize(1.0, 1.0, 1.0).unwrap(), (1.0, Prop2Case::Unit));
        let (x, case) = prop2_minimize(0.5, 2.0, 1.0).unwrap();
        assert_relative_eq!(x, 0.5f64.sqrt(), max_relative = 1e-15);
        assert_eq!(case, Prop2Case::DifferenceBranch);
        // boundary a = b + c: both branches give 1
        assert_eq!(prop2_minimize(3.0, 1.0, 2.0).unwrap().0, 1.0);
    }

    #[test]
    fn prop2_degenerate_inputs() {
        assert!(matches!(prop2_minimize(0.0, 0.0, 0.0), Err(Error::DegenerateInput(_))));
        assert!(matches!(prop2_minimize(2.0, 0.0, 0.0), Err(Error::DegenerateInput(_))));
        assert!(matches!(prop2_minimize(0.0, 2.0, 1.0), Err(Error::DegenerateInput(_))));
        assert_eq!(prop2_minimize(0.0, 1.0, 1.0).unwrap().0, 1.0);
        assert_eq!(prop2_minimize(0.0, 1.0, 2.0).unwrap().0, 1.0);
        assert_eq!(prop2_minimize(-1.0, 1.0, 2.0).unwrap_err().key(), Some("a"));
    }

    fn scripted(norms: &[&[f64]]) -> StepRound {
        // norms[h][m] along e_1 so node norms and averages are known exactly
        let avg_grads = norms
            .iter()
            .map(|ns| Vector::from_element(1, ns.iter().sum::<f64>() / ns.len() as f64))
            .collect();
        StepRound {
            round: 0,
            avg_iterates: Vec::new(),
            avg_grads,
            node_grad_norms: norms.iter().map(|ns| ns.to_vec()).collect(),
            drift: Vec::new(),
        }
    }

    #[test]
    fn thm4_scripted_norms() {
        let steps = [scripted(&[&[3.0], &[4.0]])];
        let (eta, gamma, sigma) = (0.1, 2.0, 0.5);
        let inp = inputs(1.0, 1.5, sigma, 1, 2, 1, eta, gamma);
        let rep = thm4_terms(Some(&steps), &inp, 1.0).unwrap();
        let t = |name| rep.terms.iter().find(|t| t.name == name).unwrap().value;
        assert_relative_eq!(t("distance"), 2.25 / (gamma * eta * 2.0), max_relative = 1e-14);
        assert_relative_eq!(t("avg_gradients"), gamma * eta / 2.0 * 25.0, max_relative = 1e-14);
        assert_relative_eq!(t("noise"), gamma * eta * 0.25, max_relative = 1e-14);
        assert_relative_eq!(t("outer_mismatch"), eta / 2.0 * 49.0, max_relative = 1e-14);
        assert_relative_eq!(t("max_round"), eta / (gamma * 2.0) * 49.0, max_relative = 1e-14);
        assert_relative_eq!(t("local_gradients"), eta * sigma * 5.0, max_relative = 1e-14);
        assert_relative_eq!(
            rep.value,
            rep.terms.iter().map(|t| t.value).sum::<f64>(),
            max_relative = 1e-15
        );

        let unit = thm4_terms(Some(&steps), &inputs(1.0, 1.5, sigma, 1, 2, 1, eta, 1.0), 1.0).unwrap();
        assert_eq!(unit.terms[3].value, 0.0);

        let still = [scripted(&[&[0.0, 0.0], &[0.0, 0.0]])];
        let rep = thm4_terms(Some(&still), &inputs(1.0, 0.0, 0.0, 2, 2, 1, eta, 1.0), 1.0).unwrap();
        assert_eq!(rep.value, 0.0);

        assert!(matches!(thm4_terms(None, &inp, 1.0), Err(Error::MissingData(_))));
    }

    #[test]
    fn recommendation_boundary_and_errors() {
        assert!(matches!(
            recommend_gamma(None, &inputs(1.0, 1.0, 1.0, 1, 1, 1, 0.1, 1.0)),
            Err(Error::MissingData(_))
        ));
        assert!(matches!(
            recommend_gamma(Some(&[]), &inputs(1.0, 1.0, 1.0, 1, 1, 1, 0.1, 1.0)),
            Err(Error::MissingData(_))
        ));
        // a = b + c: g1 = g2 = 1, H = 1, R = 1, eta = 1, D^2 = sigma^2 + 1
        let steps = [scripted(&[&[1.0]])];
        let rec = recommend_gamma(Some(&steps), &inputs(1.0, 2f64.sqrt(), 1.0, 1, 1, 1, 1.0, 1.0)).unwrap();
        assert_relative_eq!(rec.a, rec.b + rec.c, max_relative = 1e-15);
        assert_eq!(rec.gamma, 1.0);
        assert_eq!(rec.regime, Regime::Balanced);
    }

    proptest! {
        #[test]
        fn reports_sum_their_terms(
            l in 0.1..10.0f64, d in 0.0..5.0f64, sigma in 0.0..5.0f64,
            m in 1usize..16, h in 1usize..64, r in 1usize..200,
            eta in 1e-4..1.0f64, gamma in 0.05..3.0f64, mu in 0.0..0.95f64,
        ) {
            let mut inp = inputs(l, d, sigma, m, h, r, eta, gamma);
            inp.mu = Some(mu);
            for rep in [thm1_bound(&inp).unwrap(), thm2_bound(&inp).unwrap(), thm3_bound(&inp).unwrap()] {
                let sum: f64 = rep.terms.iter().map(|t| t.value).sum();
                prop_assert!((rep.value - sum).abs() <= 1e-12 * rep.value.abs().max(f64::MIN_POSITIVE));
                prop_assert_eq!(rep.constraint_ok, rep.constraint_slack >= 0.0);
            }
        }

        #[test]
        fn thm1_monotone(
            l in 0.1..10.0f64, d in 0.1..5.0f64, sigma in 0.1..5.0f64,
            m in 1usize..16, h in 1usize..64, r in 1usize..200,
            eta in 1e-4..1.0f64, gamma in 0.05..3.0f64,
        ) {
            let base = thm1_bound(&inputs(l, d, sigma, m, h, r, eta, gamma)).unwrap().value;
            prop_assert!(thm1_bound(&inputs(l, d, sigma, m, h, r + 1, eta, gamma)).unwrap().value < base);
            prop_assert!(thm1_bound(&inputs(l, d, sigma, m + 1, h, r, eta, gamma)).unwrap().value < base);
            prop_assert!(thm1_bound(&inputs(l, d, sigma * 1.1, m, h, r, eta, gamma)).unwrap().value > base);
        }

        #[test]
        fn prop2_beats_nearby_points(a in 0.0..10.0f64, b in 0.0..10.0f64, c in 0.0..10.0f64) {
            prop_assume!(a > 0.0 && b + c > 0.0);
            let (x, _) = prop2_minimize(a, b, c).unwrap();
            let gx = prop2_objective(x, a, b, c);
            for t in [0.5, 0.9, 0.999, 1.001, 1.1, 2.0] {
                prop_assert!(gx <= prop2_objective(x * t, a, b, c) + 1e-12 * gx);
            }
        }
    }
}
