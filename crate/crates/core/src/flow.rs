//! Minimizing movements `U^n = J_τ(U^{n−1})` for the flow
//! `−|u'|^{p−2}u' ∈ ∂E(u)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::envelope::prox;
use crate::error::{Error, Result};
use crate::functions::{ConvexFn, FnSpec};
use crate::io::{ext_real, ext_real_vec, fmt_f64};
use crate::spaces::{PowerParams, SpaceSpec};

/// Slack on the per-step energy inequality.
pub const DISSIPATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub tau: f64,
    pub p: f64,
    pub states: Vec<Vec<f64>>,
    #[serde(with = "ext_real_vec")]
    pub energies: Vec<f64>,
    /// Euler–Lagrange certification gap of each step; 0 for the initial state.
    #[serde(with = "ext_real_vec")]
    pub residuals: Vec<f64>,
}

impl FlowTrajectory {
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["n".to_string(), "t".to_string()];
        h.extend((0..self.states[0].len()).map(|k| format!("u{k}")));
        h.push("energy".into());
        h.push("residual".into());
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.states
            .iter()
            .enumerate()
            .map(|(n, u)| {
                let mut row = vec![n.to_string(), fmt_f64(n as f64 * self.tau)];
                row.extend(u.iter().map(|x| fmt_f64(*x)));
                row.push(fmt_f64(self.energies[n]));
                row.push(fmt_f64(self.residuals[n]));
                row
            })
            .collect()
    }

    /// Steps violating `E(U^n) + ‖U^n − U^{n−1}‖^p/(pτ^{p−1}) ≤ E(U^{n−1}) + slack`.
    pub fn dissipation_violations(&self, space: &SpaceSpec) -> Result<usize> {
        let mut count = 0;
        for n in 1..self.states.len() {
            let d: Vec<f64> = self.states[n]
                .iter()
                .zip(&self.states[n - 1])
                .map(|(a, b)| a - b)
                .collect();
            let cost = space.norm(&d)?.powf(self.p) / (self.p * self.tau.powf(self.p - 1.0));
            if !(self.energies[n] + cost <= self.energies[n - 1] + DISSIPATION_SLACK) {
                count += 1;
            }
        }
        Ok(count)
    }
}

/// Implicit Euler iterates with the envelope solver at `ε = τ`.
pub fn minimizing_movement(
    e: &ConvexFn,
    space: &SpaceSpec,
    p: f64,
    tau: f64,
    steps: usize,
    u0: &[f64],
) -> Result<FlowTrajectory> {
    Error::check_dim(space.dim(), u0.len())?;
    if !e.domain_contains(u0) {
        return Err(Error::Domain(format!(
            "initial state {u0:?} has infinite energy"
        )));
    }
    let params = PowerParams::new(p, tau)?;
    let mut states = vec![u0.to_vec()];
    let mut energies = vec![e.evaluate(u0)];
    let mut residuals = vec![0.0];
    for _ in 0..steps {
        let sol = prox(e, space, &params, states.last().expect("non-empty"))?;
        energies.push(e.evaluate(&sol.minimizer));
        residuals.push(sol.optimality_gap);
        states.push(sol.minimizer);
    }
    Ok(FlowTrajectory {
        tau,
        p,
        states,
        energies,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpRow {
    pub n: usize,
    #[serde(with = "ext_real")]
    pub error: f64,
}

/// Analytic `S(t)u0` for `p = 2` Euclidean flows of `0` and `½uᵀAu + c`.
fn semigroup_reference(e: &ConvexFn, space: &SpaceSpec, t: f64, u0: &[f64]) -> Result<Vec<f64>> {
    if !space.is_euclidean() {
        return Err(Error::Unsupported(
            "exponential formula reference needs a Euclidean space".into(),
        ));
    }
    match e.spec() {
        Some(FnSpec::Zero) => Ok(u0.to_vec()),
        Some(FnSpec::Quadratic { a, b, .. })
            if b.as_ref().is_none_or(|b| b.iter().all(|x| *x == 0.0)) =>
        {
            let n = a.len();
            let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
            let eig = m.symmetric_eigen();
            let decay = DVector::from_iterator(n, eig.eigenvalues.iter().map(|l| (-l * t).exp()));
            let q = &eig.eigenvectors;
            let coeffs = q.transpose() * DVector::from_column_slice(u0);
            Ok((q * coeffs.component_mul(&decay)).iter().copied().collect())
        }
        _ => Err(Error::Unsupported(format!(
            "no analytic flow reference for {}",
            e.label()
        ))),
    }
}

/// `‖J_{t/n}^n(u0) − S(t)u0‖` for each `n`, with `p = 2`.
pub fn exponential_formula_check(
    e: &ConvexFn,
    space: &SpaceSpec,
    t: f64,
    n_list: &[usize],
    u0: &[f64],
) -> Result<Vec<ExpRow>> {
    if !(t > 0.0) || n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0
    {
        return Err(Error::param(
            "need t > 0 and strictly increasing positive n_list",
        ));
    }
    Error::check_dim(space.dim(), u0.len())?;
    let reference = semigroup_reference(e, space, t, u0)?;
    n_list
        .iter()
        .map(|&n| {
            let traj = minimizing_movement(e, space, 2.0, t / n as f64, n, u0)?;
            let last = traj.states.last().expect("non-empty");
            let d: Vec<f64> = last.iter().zip(&reference).map(|(a, b)| a - b).collect();
            Ok(ExpRow {
                n,
                error: space.norm(&d)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeRow {
    pub t: f64,
    #[serde(with = "ext_real")]
    pub error: f64,
}

/// `u' = −sign(g)|g|^{1/(p−1)}` with `g = E'(u)`; zero at equilibria.
fn velocity(e: &ConvexFn, p: f64, u: f64) -> f64 {
    let g = e.subgradient(&[u]).map(|g| g[0]).unwrap_or(f64::NAN);
    if g == 0.0 {
        0.0
    } else {
        -g.signum() * g.abs().powf(1.0 / (p - 1.0))
    }
}

/// Error of the implicit scheme against RK4 with step `τ/100`, one row per step.
pub fn ode_reference_error(
    e: &ConvexFn,
    p: f64,
    tau: f64,
    steps: usize,
    u0: f64,
) -> Result<Vec<OdeRow>> {
    if e.dim().is_some_and(|d| d != 1) {
        return Err(Error::Unsupported(
            "ODE reference is one-dimensional".into(),
        ));
    }
    if !e.is_smooth() {
        return Err(Error::Unsupported(format!(
            "{} is not continuously differentiable",
            e.label()
        )));
    }
    let traj = minimizing_movement(e, &SpaceSpec::euclidean(1), p, tau, steps, &[u0])?;
    let h = tau / 100.0;
    let mut u = u0;
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(OdeRow { t: 0.0, error: 0.0 });
    for n in 1..=steps {
        for _ in 0..100 {
            let k1 = velocity(e, p, u);
            let k2 = velocity(e, p, u + 0.5 * h * k1);
            let k3 = velocity(e, p, u + 0.5 * h * k2);
            let k4 = velocity(e, p, u + h * k3);
            u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        rows.push(OdeRow {
            t: n as f64 * tau,
            error: (traj.states[n][0] - u).abs(),
        });
    }
    Ok(rows)
}
