//! The exchange's reduced generator applied to a critic: drift terms with
//! finite-difference derivatives, the trader's driver and the dark-fill jumps.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::nets::{ActorOutput, ValueFn, STATE_DIM};
use crate::error::{invalid, Result};
use crate::model::special::{gauss_legendre, gl32_unit};
use crate::model::{DarkPoolSpec, Fees, FillLaw, MarketParams};
use crate::trader::{exp_jump_bracket, hamiltonian};

/// Sign convention of the driver bracket.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorForm {
    /// Generator of `v - y` with `dY = Z dW0 + U (dN - theta dt) - H dt`: adds
    /// `h - gamma nu z / sigma + sum theta (1 - e^{k nu}) u`.
    Derived,
    /// Subtracts the bracket `lit - rho (z + q sigma)^2 / 2 - gamma nu z / sigma + jump bracket / rho`.
    #[default]
    Printed,
}

/// Sampling box `[0,T] x [0,Q] x [0,S] x [0,X] x [0,I]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBox {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub q_max: f64,
    pub s_max: f64,
    pub x_max: f64,
    pub iota_max: f64,
}

impl Default for StateBox {
    fn default() -> Self {
        Self { horizon: 1.0, q_max: 1.2, s_max: 2.0, x_max: 2.0, iota_max: 0.05 }
    }
}

impl StateBox {
    pub fn upper(&self) -> [f64; STATE_DIM] {
        [self.horizon, self.q_max, self.s_max, self.x_max, self.iota_max]
    }

    pub fn validate(&self) -> Result<()> {
        if self.upper().iter().all(|u| u.is_finite() && *u > 0.0) {
            Ok(())
        } else {
            Err(invalid("state box bounds must be finite and positive"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub fd_step: f64,
    pub form: OperatorForm,
    pub bounds: StateBox,
    /// Gauss-Legendre nodes over the unfilled part of each fill law.
    pub quad_nodes: usize,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self { fd_step: 1e-3, form: OperatorForm::Printed, bounds: StateBox::default(), quad_nodes: 32 }
    }
}

type Rule = (Vec<f64>, Vec<f64>);

fn unit_rule(n: usize) -> Rule {
    if n == 32 {
        return gl32_unit().clone();
    }
    let (x, w) = gauss_legendre(n);
    (x.iter().map(|xi| 0.5 * (xi + 1.0)).collect(), w.iter().map(|wi| 0.5 * wi).collect())
}

/// Critic derivatives at one state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    pub v: f64,
    pub d_iota: f64,
    pub d_q: f64,
    pub d_s: f64,
    pub d_x: f64,
    pub d_ss: f64,
}

/// Operator value and its parts at one state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorTerms {
    pub value: f64,
    pub derivatives: Derivatives,
    pub nu: f64,
    pub ell: Vec<f64>,
    /// Terms multiplying critic derivatives.
    pub drift: f64,
    /// Driver contribution as it enters the value.
    pub bracket: f64,
    /// `sum theta e^{k nu} E[v(after fill) - v]`.
    pub jump: f64,
    /// A finite difference fell back to a one-sided stencil at the box edge.
    pub one_sided: bool,
}

// Coordinates differentiated: q, s, x, iota.
const COORDS: [usize; 4] = [1, 2, 3, 4];

/// `(offsets, first-derivative weights, second-derivative weights)` in units of `h`.
fn stencil(value: f64, upper: f64, h: f64) -> (&'static [i32], &'static [f64], &'static [f64], bool) {
    const C_OFF: [i32; 3] = [-1, 0, 1];
    const C_D1: [f64; 3] = [-0.5, 0.0, 0.5];
    const C_D2: [f64; 3] = [1.0, -2.0, 1.0];
    const F_OFF: [i32; 4] = [0, 1, 2, 3];
    const F_D1: [f64; 4] = [-1.5, 2.0, -0.5, 0.0];
    const F_D2: [f64; 4] = [2.0, -5.0, 4.0, -1.0];
    const B_OFF: [i32; 4] = [0, -1, -2, -3];
    const B_D1: [f64; 4] = [1.5, -2.0, 0.5, 0.0];
    if value - h < 0.0 {
        (&F_OFF, &F_D1, &F_D2, true)
    } else if value + h > upper {
        (&B_OFF, &B_D1, &F_D2, true)
    } else {
        (&C_OFF, &C_D1, &C_D2, false)
    }
}

/// States after a fill of size `m` in a pool charging `c_d`.
fn after_fill(s: &[f64], m: f64, c_d: f64) -> [f64; STATE_DIM] {
    [s[0], s[1] - m, s[2], s[3] + s[2] * m, s[4] + c_d * m]
}

fn fees_of(c: &ActorOutput) -> Fees {
    Fees { lit: c.c_l, dark: c.c_d.clone() }
}

/// Collects critic evaluation points and maps results back.
struct PointSet {
    rows: Vec<[f64; STATE_DIM]>,
}

impl PointSet {
    fn push(&mut self, p: [f64; STATE_DIM]) -> usize {
        self.rows.push(p);
        self.rows.len() - 1
    }

    fn evaluate(&self, critic: &dyn ValueFn) -> Vec<f64> {
        if self.rows.is_empty() {
            return Vec::new();
        }
        let flat: Vec<f64> = self.rows.iter().flatten().copied().collect();
        let x = Array2::from_shape_vec((self.rows.len(), STATE_DIM), flat).expect("shape");
        critic.values(x.view())
    }
}

/// Indices of the stencil points of one state.
struct StencilPlan {
    center: usize,
    coords: Vec<(Vec<usize>, &'static [f64], &'static [f64])>,
    one_sided: bool,
}

fn plan_stencil(points: &mut PointSet, s: &[f64], cfg: &OperatorConfig) -> StencilPlan {
    let h = cfg.fd_step;
    let upper = cfg.bounds.upper();
    let base: [f64; STATE_DIM] = s.try_into().expect("state row");
    let center = points.push(base);
    let mut one_sided = false;
    let mut coords = Vec::new();
    for &c in &COORDS {
        let (offs, d1, d2, edge) = stencil(s[c], upper[c], h);
        one_sided |= edge;
        let idx = offs
            .iter()
            .map(|&o| {
                if o == 0 {
                    center
                } else {
                    let mut p = base;
                    p[c] += o as f64 * h;
                    points.push(p)
                }
            })
            .collect();
        coords.push((idx, d1, d2));
    }
    StencilPlan { center, coords, one_sided }
}

fn derivatives_from(plan: &StencilPlan, vals: &[f64], h: f64) -> Derivatives {
    let d1 = |k: usize| {
        let (idx, w, _) = &plan.coords[k];
        idx.iter().zip(w.iter()).map(|(i, w)| w * vals[*i]).sum::<f64>() / h
    };
    let (idx, _, w2) = &plan.coords[1];
    let d_ss = idx.iter().zip(w2.iter()).map(|(i, w)| w * vals[*i]).sum::<f64>() / (h * h);
    Derivatives { v: vals[plan.center], d_q: d1(0), d_s: d1(1), d_x: d1(2), d_iota: d1(3), d_ss }
}

/// Indices of the jump nodes of one `(state, controls, allocation)` triple.
#[derive(Clone)]
struct JumpPlan {
    per_pool: Vec<Vec<(usize, f64)>>,
}

fn plan_jumps(
    points: &mut PointSet,
    s: &[f64],
    c_d: &[f64],
    ell: &[f64],
    rule: &Rule,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
) -> JumpPlan {
    let per_pool = pools
        .iter()
        .enumerate()
        .map(|(i, pool)| {
            if ell[i] <= 0.0 {
                return Vec::new();
            }
            let law = FillLaw::new(pool, p.k_c, c_d[i]);
            law.fill_nodes(ell[i], rule)
                .into_iter()
                .map(|(m, w)| (points.push(after_fill(s, m, c_d[i])), w))
                .collect()
        })
        .collect();
    JumpPlan { per_pool }
}

fn expectations(plan: &JumpPlan, vals: &[f64], v0: f64) -> Vec<f64> {
    plan.per_pool
        .iter()
        .map(|nodes| nodes.iter().map(|(i, w)| w * (vals[*i] - v0)).sum::<f64>())
        .collect()
}

/// Assembles the operator from critic derivatives and per-pool expected
/// increments `E[v(after fill) - v]`; no critic evaluation happens here.
#[allow(clippy::too_many_arguments)]
fn assemble(
    s: &[f64],
    c: &ActorOutput,
    nu: f64,
    ell: &[f64],
    d: &Derivatives,
    after: &[f64],
    form: OperatorForm,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
) -> (f64, f64, f64, f64) {
    let (q, spot) = (s[1], s[2]);
    let lam = p.lambda_rate;
    let intensity = (p.k_theta * nu).exp();
    let drift = (-c.c_l * (nu + lam) + p.kappa * (p.gamma * nu + p.epsilon * lam)) * d.d_iota
        + nu * d.d_q
        + (p.gamma * nu + p.epsilon * lam) * d.d_s
        - ((spot + p.eta * nu) * nu - c.c_l * nu) * d.d_x
        + 0.5 * p.sigma * p.sigma * d.d_ss;
    let lit = -p.phi * q * q - p.eta * nu * nu + c.c_l * nu + q * (p.epsilon * lam - 2.0 * p.alpha * nu);
    let quad = -0.5 * p.rho * (c.z + q * p.sigma).powi(2);
    let cross = -p.gamma * nu / p.sigma * c.z;
    let jb = if pools.is_empty() { 0.0 } else { exp_jump_bracket(q, &c.u, p, pools, &c.c_d, ell) * intensity / p.rho };
    let bracket = match form {
        OperatorForm::Derived => {
            let u_net: f64 = pools.iter().zip(&c.u).map(|(pl, u)| pl.theta * (1.0 - intensity) * u).sum();
            lit + quad + cross - jb + u_net
        }
        OperatorForm::Printed => -(lit + quad + cross + jb),
    };
    let jump: f64 = pools.iter().zip(after).map(|(pl, e)| pl.theta * intensity * e).sum();
    (drift + bracket + jump, drift, bracket, jump)
}

fn check_inputs(states: ArrayView2<f64>, controls: &[ActorOutput], pools: &[DarkPoolSpec], cfg: &OperatorConfig) -> Result<()> {
    if states.ncols() != STATE_DIM || states.nrows() != controls.len() {
        return Err(invalid("one five-dimensional state per control expected"));
    }
    if controls.iter().any(|c| c.c_d.len() != pools.len() || c.u.len() != pools.len()) {
        return Err(invalid("one dark fee and one jump exposure per pool expected"));
    }
    if !(cfg.fd_step > 0.0) {
        return Err(invalid("finite-difference step must be positive"));
    }
    if cfg.quad_nodes == 0 {
        return Err(invalid("at least one quadrature node required"));
    }
    Ok(())
}

/// Trader response `(nu, ell)` to the controls at inventory `q`.
fn response(q: f64, c: &ActorOutput, p: &MarketParams, pools: &[DarkPoolSpec]) -> Result<(f64, Vec<f64>)> {
    let (_, ctrl) = hamiltonian(q, c.z, &c.u, &fees_of(c), p, pools)?;
    Ok((ctrl.nu, ctrl.ell))
}

/// Operator values for a batch of states under the given controls.
pub fn operator_batch(
    states: ArrayView2<f64>,
    controls: &[ActorOutput],
    critic: &dyn ValueFn,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    cfg: &OperatorConfig,
) -> Result<Vec<OperatorTerms>> {
    check_inputs(states, controls, pools, cfg)?;
    let rule = unit_rule(cfg.quad_nodes);
    let mut points = PointSet { rows: Vec::new() };
    let mut plans = Vec::with_capacity(controls.len());
    for (row, c) in states.rows().into_iter().zip(controls) {
        let s = row.to_vec();
        let (nu, ell) = response(s[1], c, p, pools)?;
        let st = plan_stencil(&mut points, &s, cfg);
        let jp = plan_jumps(&mut points, &s, &c.c_d, &ell, &rule, p, pools);
        plans.push((s, nu, ell, st, jp));
    }
    let vals = points.evaluate(critic);
    Ok(plans
        .into_iter()
        .zip(controls)
        .map(|((s, nu, ell, st, jp), c)| {
            let d = derivatives_from(&st, &vals, cfg.fd_step);
            let after = expectations(&jp, &vals, d.v);
            let (value, drift, bracket, jump) = assemble(&s, c, nu, &ell, &d, &after, cfg.form, p, pools);
            OperatorTerms { value, derivatives: d, nu, ell, drift, bracket, jump, one_sided: st.one_sided }
        })
        .collect())
}

/// Single-state convenience wrapper.
pub fn evaluate_operator(
    state: &[f64; STATE_DIM],
    controls: &ActorOutput,
    critic: &dyn ValueFn,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    cfg: &OperatorConfig,
) -> Result<OperatorTerms> {
    let x = Array2::from_shape_vec((1, STATE_DIM), state.to_vec()).expect("shape");
    Ok(operator_batch(x.view(), std::slice::from_ref(controls), critic, p, pools, cfg)?.remove(0))
}

/// Central-difference steps for the control gradient, in head order.
const STEP_FEE: f64 = 1e-6;
const STEP_Z: f64 = 1e-6;
const STEP_U: f64 = 1e-6;

/// Operator values and their gradients with respect to the controls, in the
/// head order `[c_l, c_d (M), z, u (M)]`. Lit-fee and `z` perturbations reuse
/// the critic evaluations; dark fees and exposures move the allocation and
/// are re-evaluated through the critic.
pub fn operator_with_control_gradient(
    states: ArrayView2<f64>,
    controls: &[ActorOutput],
    critic: &dyn ValueFn,
    p: &MarketParams,
    pools: &[DarkPoolSpec],
    cfg: &OperatorConfig,
) -> Result<(Vec<OperatorTerms>, Vec<Vec<f64>>)> {
    check_inputs(states, controls, pools, cfg)?;
    let rule = unit_rule(cfg.quad_nodes);
    let m = pools.len();
    let mut points = PointSet { rows: Vec::new() };
    struct Row {
        s: Vec<f64>,
        base: (f64, Vec<f64>),
        stencil: StencilPlan,
        jumps: JumpPlan,
        /// `(head index, sign, perturbed controls, response, jump plan)`.
        bumped: Vec<(usize, f64, ActorOutput, (f64, Vec<f64>), JumpPlan)>,
    }
    let mut rows = Vec::with_capacity(controls.len());
    for (row, c) in states.rows().into_iter().zip(controls) {
        let s = row.to_vec();
        let base = response(s[1], c, p, pools)?;
        let stencil = plan_stencil(&mut points, &s, cfg);
        let jumps = plan_jumps(&mut points, &s, &c.c_d, &base.1, &rule, p, pools);
        let mut bumped = Vec::new();
        for i in 0..m {
            for sign in [1.0, -1.0] {
                let mut cd = c.clone();
                cd.c_d[i] += sign * STEP_FEE;
                let r = response(s[1], &cd, p, pools)?;
                let jp = plan_jumps(&mut points, &s, &cd.c_d, &r.1, &rule, p, pools);
                bumped.push((1 + i, sign, cd, r, jp));
                let mut cu = c.clone();
                cu.u[i] += sign * STEP_U;
                let r = response(s[1], &cu, p, pools)?;
                // Exposures only move the fills through the allocation.
                let jp = if r.1 == base.1 {
                    jumps.clone()
                } else {
                    plan_jumps(&mut points, &s, &cu.c_d, &r.1, &rule, p, pools)
                };
                bumped.push((2 + m + i, sign, cu, r, jp));
            }
        }
        rows.push(Row { s, base, stencil, jumps, bumped });
    }
    let vals = points.evaluate(critic);
    let mut terms = Vec::with_capacity(rows.len());
    let mut grads = Vec::with_capacity(rows.len());
    for (r, c) in rows.into_iter().zip(controls) {
        let d = derivatives_from(&r.stencil, &vals, cfg.fd_step);
        let after = expectations(&r.jumps, &vals, d.v);
        let (nu, ell) = &r.base;
        let (value, drift, bracket, jump) = assemble(&r.s, c, *nu, ell, &d, &after, cfg.form, p, pools);
        let mut g = vec![0.0; 2 + 2 * m];
        // Lit fee and z only move the lit rate and the driver.
        for (k, step) in [(0usize, STEP_FEE), (1 + m, STEP_Z)] {
            let mut up = c.clone();
            let mut dn = c.clone();
            if k == 0 {
                up.c_l += step;
                dn.c_l -= step;
            } else {
                up.z += step;
                dn.z -= step;
            }
            let (nu_up, _) = response(r.s[1], &up, p, pools)?;
            let (nu_dn, _) = response(r.s[1], &dn, p, pools)?;
            let f_up = assemble(&r.s, &up, nu_up, ell, &d, &after, cfg.form, p, pools).0;
            let f_dn = assemble(&r.s, &dn, nu_dn, ell, &d, &after, cfg.form, p, pools).0;
            g[k] = (f_up - f_dn) / (2.0 * step);
        }
        for (k, sign, cc, (nu_b, ell_b), jp) in &r.bumped {
            let after_b = expectations(jp, &vals, d.v);
            let f = assemble(&r.s, cc, *nu_b, ell_b, &d, &after_b, cfg.form, p, pools).0;
            let step = if *k <= m { STEP_FEE } else { STEP_U };
            g[*k] += sign * f / (2.0 * step);
        }
        terms.push(OperatorTerms {
            value,
            derivatives: d,
            nu: *nu,
            ell: ell.clone(),
            drift,
            bracket,
            jump,
            one_sided: r.stencil.one_sided,
        });
        grads.push(g);
    }
    Ok((terms, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{table1_pools, LiquidityParam};
    use crate::trader::driver_h;

    fn setup() -> (MarketParams, Vec<DarkPoolSpec>) {
        (MarketParams::table1(), table1_pools(LiquidityParam::Rate))
    }

    fn ctrl(m: usize) -> ActorOutput {
        ActorOutput { c_l: 0.01, c_d: (0..m).map(|i| 0.003 + 0.002 * i as f64).collect(), z: -0.015, u: vec![0.001; m] }
    }

    const STATE: [f64; 5] = [0.3, 0.8, 1.1, 0.4, 0.02];

    #[test]
    fn constant_critic_leaves_the_bracket() {
        let (p, pools) = setup();
        let c = ctrl(2);
        let konst = |_: &[f64]| 0.7;
        for form in [OperatorForm::Printed, OperatorForm::Derived] {
            let cfg = OperatorConfig { form, ..Default::default() };
            let t = evaluate_operator(&STATE, &c, &konst, &p, &pools, &cfg).unwrap();
            assert_eq!(t.jump, 0.0);
            assert!(t.drift.abs() < 1e-12);
            let fees = Fees { lit: c.c_l, dark: c.c_d.clone() };
            let h = driver_h(STATE[1], c.z, &c.u, t.nu, &t.ell, &fees, &p, &pools).unwrap();
            let cross = -p.gamma * t.nu / p.sigma * c.z;
            let jb = exp_jump_bracket(STATE[1], &c.u, &p, &pools, &c.c_d, &t.ell) / p.rho;
            let want = match form {
                OperatorForm::Printed => -(h + jb + cross + jb),
                OperatorForm::Derived => {
                    let k = (p.k_theta * t.nu).exp();
                    h + cross + pools.iter().zip(&c.u).map(|(pl, u)| pl.theta * (1.0 - k) * u).sum::<f64>()
                }
            };
            assert!((t.value - want).abs() < 1e-12, "{form:?}: {} {want}", t.value);
        }
    }

    #[test]
    fn iota_critic_gives_revenue() {
        let (p, pools) = setup();
        let c = ctrl(2);
        let iota = |s: &[f64]| s[4];
        let t = evaluate_operator(&STATE, &c, &iota, &p, &pools, &OperatorConfig::default()).unwrap();
        let revenue = -c.c_l * (t.nu + p.lambda_rate) + p.kappa * (p.gamma * t.nu + p.epsilon * p.lambda_rate);
        assert!((t.derivatives.d_iota - 1.0).abs() < 1e-10);
        assert!((t.drift - revenue).abs() < 1e-10);
        let dark: f64 = pools
            .iter()
            .enumerate()
            .map(|(i, pl)| pl.theta * c.c_d[i] * FillLaw::new(pl, p.k_c, c.c_d[i]).mean_fill(t.ell[i]))
            .sum();
        assert!((t.jump - dark).abs() < 1e-12, "{} {dark}", t.jump);
    }

    fn cubic(s: &[f64]) -> f64 {
        let (q, sp, x, i) = (s[1], s[2], s[3], s[4]);
        0.3 * q * q * q - 0.2 * sp * sp * sp + 0.5 * sp * x + 1.7 * i * i * i + q * i - 0.1 * x * x * x
    }

    fn cubic_derivatives(s: &[f64]) -> Derivatives {
        let (q, sp, x, i) = (s[1], s[2], s[3], s[4]);
        Derivatives {
            v: cubic(s),
            d_q: 0.9 * q * q + i,
            d_s: -0.6 * sp * sp + 0.5 * x,
            d_x: 0.5 * sp - 0.3 * x * x,
            d_iota: 5.1 * i * i + q,
            d_ss: -1.2 * sp,
        }
    }

    #[test]
    fn finite_differences_are_second_order() {
        let (p, pools) = setup();
        let c = ctrl(2);
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3] {
            let cfg = OperatorConfig { fd_step: h, ..Default::default() };
            let mut worst: f64 = 0.0;
            // Interior, lower and upper edges.
            for s in [STATE, [0.3, 0.0, 0.0, 0.0, 0.0], [0.3, 1.2, 2.0, 2.0, 0.05]] {
                let t = evaluate_operator(&s, &c, &cubic, &p, &pools, &cfg).unwrap();
                let want = cubic_derivatives(&s);
                let d = t.derivatives;
                for (a, b) in [(d.d_q, want.d_q), (d.d_s, want.d_s), (d.d_x, want.d_x), (d.d_iota, want.d_iota), (d.d_ss, want.d_ss)] {
                    worst = worst.max((a - b).abs());
                }
                assert_eq!(t.one_sided, s != STATE);
            }
            errs.push(worst);
        }
        assert!(errs[0] < 10.0 * 1e-4, "{errs:?}");
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
    }

    #[test]
    fn batch_equals_single_evaluations() {
        let (p, pools) = setup();
        let states = Array2::from_shape_fn((4, 5), |(i, j)| STATE[j] * (1.0 + 0.1 * i as f64).min(1.1));
        let cs: Vec<ActorOutput> = (0..4).map(|_| ctrl(2)).collect();
        let cfg = OperatorConfig::default();
        let batch = operator_batch(states.view(), &cs, &cubic, &p, &pools, &cfg).unwrap();
        for (i, b) in batch.iter().enumerate() {
            let s: [f64; 5] = states.row(i).to_vec().try_into().unwrap();
            let one = evaluate_operator(&s, &cs[i], &cubic, &p, &pools, &cfg).unwrap();
            assert_eq!(b, &one);
        }
    }

    #[test]
    fn control_gradient_matches_full_differences() {
        let (p, pools) = setup();
        let c = ctrl(2);
        let cfg = OperatorConfig::default();
        let x = Array2::from_shape_vec((1, 5), STATE.to_vec()).unwrap();
        let (terms, grads) = operator_with_control_gradient(x.view(), &[c.clone()], &cubic, &p, &pools, &cfg).unwrap();
        let base = evaluate_operator(&STATE, &c, &cubic, &p, &pools, &cfg).unwrap();
        assert_eq!(terms[0], base);
        let flat = Actor::flatten(&c);
        let h = 1e-5;
        for k in 0..flat.len() {
            let bump = |d: f64| {
                let mut v = flat.clone();
                v[k] += d;
                let o = ActorOutput { c_l: v[0], c_d: v[1..3].to_vec(), z: v[3], u: v[4..6].to_vec() };
                evaluate_operator(&STATE, &o, &cubic, &p, &pools, &cfg).unwrap().value
            };
            let fd = (bump(h) - bump(-h)) / (2.0 * h);
            assert!((fd - grads[0][k]).abs() < 1e-4 * (1.0 + fd.abs()), "head {k}: {fd} {}", grads[0][k]);
        }
    }

    use super::super::nets::Actor;
}
