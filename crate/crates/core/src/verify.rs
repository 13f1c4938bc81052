//! Seeded invariant suite across all modules, as run by `pmoreau verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::{
    convergence_profile, envelope_conjugates, envelope_identity_gap, eps_derivative,
    eps_derivative_fd, eps_monotonicity_profile, gateaux_directional_check, prox, Solver,
};
use crate::error::Result;
use crate::flow::{exponential_formula_check, minimizing_movement};
use crate::functions::{validate_convexity, AffinePiece, ConvexFn};
use crate::hj::{hj_residual, lax_oleinik, linspace};
use crate::io::ext_real;
use crate::mosco::{self, FIXTURE_NAMES};
use crate::oracle::GridSpec;
use crate::spaces::{PowerParams, SpaceSpec};

/// At most this many violations are listed per invariant; all are counted.
pub const MAX_LISTED: usize = 20;

pub const P_VALUES: [f64; 3] = [1.5, 2.0, 3.0];
pub const EPS_VALUES: [f64; 4] = [2.0, 1.0, 0.5, 0.1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub detail: String,
    #[serde(with = "ext_real")]
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub checks: usize,
    pub passed: usize,
    pub violations: Vec<Violation>,
}

impl InvariantResult {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            checks: 0,
            passed: 0,
            violations: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, amount: f64, detail: impl FnOnce() -> String) {
        self.checks += 1;
        if ok {
            self.passed += 1;
        } else if self.violations.len() < MAX_LISTED {
            self.violations.push(Violation {
                detail: detail(),
                amount,
            });
        }
    }

    /// A hard error inside a check counts as a violation.
    fn check_result<T>(&mut self, r: Result<T>, ctx: impl Fn() -> String) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.check(false, f64::NAN, || format!("{}: {e}", ctx()));
                None
            }
        }
    }

    pub fn failed(&self) -> usize {
        self.checks - self.passed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub invariants: Vec<InvariantResult>,
    pub total_checks: usize,
    pub total_violations: usize,
}

/// A catalog member paired with the space it is exercised in.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub f: ConvexFn,
    pub space: SpaceSpec,
}

/// Shipped fixtures in dimensions 1 to 3, Euclidean and non-Euclidean.
pub fn catalog() -> Vec<CatalogEntry> {
    let e1 = SpaceSpec::euclidean(1);
    let e2 = SpaceSpec::euclidean(2);
    let q3 = SpaceSpec::q_norm(2, 3.0).expect("valid space");
    let q15 = SpaceSpec::q_norm(2, 1.5).expect("valid space");
    let w3 = SpaceSpec::weighted(vec![1.0, 2.0, 0.5]).expect("valid space");
    let pieces2 = vec![
        AffinePiece {
            slope: vec![1.0, 0.0],
            intercept: 0.0,
        },
        AffinePiece {
            slope: vec![-1.0, 0.5],
            intercept: 0.2,
        },
        AffinePiece {
            slope: vec![0.0, -1.0],
            intercept: -0.1,
        },
    ];
    let quad2 = || {
        ConvexFn::quadratic(vec![vec![2.0, 0.5], vec![0.5, 1.0]], vec![0.3, -0.2], 0.0)
            .expect("PSD")
    };
    let entry = |f: ConvexFn, space: &SpaceSpec| CatalogEntry {
        f,
        space: space.clone(),
    };
    vec![
        entry(ConvexFn::zero(), &e1),
        entry(ConvexFn::one_norm(), &e1),
        entry(ConvexFn::shifted_one_norm(vec![0.5]), &e1),
        entry(ConvexFn::scalar_quadratic(2.0).expect("PSD"), &e1),
        entry(
            ConvexFn::indicator_box(vec![-1.0], vec![1.0]).expect("box"),
            &e1,
        ),
        entry(ConvexFn::indicator_point(vec![0.3]).expect("point"), &e1),
        entry(
            ConvexFn::max_affine_1d(&[(-1.0, 0.0), (0.5, 0.2), (2.0, -1.0)]).expect("pieces"),
            &e1,
        ),
        entry(
            ConvexFn::power_of_norm(3.0, e1.clone()).expect("power"),
            &e1,
        ),
        entry(ConvexFn::one_norm(), &e2),
        entry(quad2(), &e2),
        entry(
            ConvexFn::indicator_box(vec![-1.0, -0.5], vec![1.0, 0.5]).expect("box"),
            &e2,
        ),
        entry(ConvexFn::max_affine(pieces2).expect("pieces"), &e2),
        entry(
            ConvexFn::power_of_norm(1.5, e2.clone()).expect("power"),
            &e2,
        ),
        entry(ConvexFn::one_norm(), &q3),
        entry(quad2(), &q3),
        entry(
            ConvexFn::indicator_box(vec![-1.0, -1.0], vec![1.0, 1.0]).expect("box"),
            &q15,
        ),
        entry(
            ConvexFn::power_of_norm(2.0, q15.clone()).expect("power"),
            &q15,
        ),
        entry(ConvexFn::one_norm(), &w3),
        entry(
            ConvexFn::quadratic(
                vec![
                    vec![1.0, 0.0, 0.0],
                    vec![0.0, 2.0, 0.0],
                    vec![0.0, 0.0, 0.5],
                ],
                vec![0.0; 3],
                0.0,
            )
            .expect("PSD"),
            &w3,
        ),
    ]
}

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-r..r)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn duality_invariants(seed: u64) -> Vec<InvariantResult> {
    let mut ident = InvariantResult::new("duality_map_identities");
    let mut mono = InvariantResult::new("duality_map_monotone");
    let mut rng = rng_for(seed, 1);
    for k in 0..1000 {
        let dim = rng.random_range(1..=4);
        let space = match k % 3 {
            0 => SpaceSpec::euclidean(dim),
            1 => SpaceSpec::q_norm(dim, 1.5).expect("valid"),
            _ => SpaceSpec::q_norm(dim, 3.0).expect("valid"),
        };
        let p = P_VALUES[(k / 3) % 3];
        let v = random_point(&mut rng, dim, 3.0);
        let w = random_point(&mut rng, dim, 3.0);
        let (Ok(fv), Ok(nv)) = (space.duality_map(p, &v), space.norm(&v)) else {
            unreachable!("dims match")
        };
        let pairing = crate::spaces::dot(&fv, &v);
        let target = nv.powf(p);
        let dual = space.dual_norm_unchecked(&fv).powf(p / (p - 1.0));
        let err = rel(pairing, target).max(rel(dual, target));
        ident.check(err <= 1e-10, err, || format!("{space:?} p={p} v={v:?}"));
        let (gap, _) = space
            .duality_monotonicity_gap(p, &v, &w)
            .expect("dims match");
        mono.check(gap >= -1e-12, gap, || {
            format!("{space:?} p={p} v={v:?} w={w:?}")
        });
    }
    vec![ident, mono]
}

fn convexity_invariant(seed: u64) -> InvariantResult {
    let mut r = InvariantResult::new("catalog_convexity");
    for (i, e) in catalog().iter().enumerate() {
        let rep = validate_convexity(&e.f, e.space.dim(), 64, seed.wrapping_add(i as u64));
        r.check(rep.is_clean(), rep.violations.len() as f64, || {
            format!("{}: {:?}", e.f.label(), rep.violations.first())
        });
    }
    r
}

fn sweep_points(e: &CatalogEntry, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let d = e.space.dim();
    let mut pts = vec![vec![0.0; d]];
    pts.extend((0..3).map(|_| random_point(rng, d, 2.5)));
    pts
}

fn envelope_invariants(seed: u64) -> Vec<InvariantResult> {
    let mut el = InvariantResult::new("euler_lagrange_certified");
    let mut ai = InvariantResult::new("envelope_identity");
    let mut mono = InvariantResult::new("sandwich_and_eps_monotonicity");
    let mut young = InvariantResult::new("young_bound");
    let mut rng = rng_for(seed, 2);
    for e in catalog() {
        for u in sweep_points(&e, &mut rng) {
            for p in P_VALUES {
                let ctx = || format!("{} in {:?}, p={p}, u={u:?}", e.f.label(), e.space);
                for eps in EPS_VALUES {
                    let params = PowerParams::new(p, eps).expect("valid");
                    let Some(sol) = el.check_result(prox(&e.f, &e.space, &params, &u), || {
                        format!("{} eps={eps}", ctx())
                    }) else {
                        continue;
                    };
                    el.check(sol.optimality_gap <= 1e-6, sol.optimality_gap, || {
                        format!("{} eps={eps}", ctx())
                    });
                    let gap = envelope_identity_gap(&sol, &e.f, &e.space, &params);
                    let tol = if sol.solver == Solver::ClosedForm {
                        1e-8 * (1.0 + sol.envelope_value.abs())
                    } else {
                        1e-5
                    };
                    ai.check(gap <= tol, gap, || {
                        format!("{} eps={eps} solver={:?}", ctx(), sol.solver)
                    });
                }
                if let Some(prof) = mono.check_result(
                    eps_monotonicity_profile(&e.f, &e.space, p, &u, &EPS_VALUES),
                    ctx,
                ) {
                    mono.check(prof.violations == 0, prof.violations as f64, ctx);
                }
                if e.f.domain_contains(&u) && e.f.minimal_section(&e.space, &u).is_ok() {
                    if let Some(prof) = young
                        .check_result(convergence_profile(&e.f, &e.space, p, &u, &EPS_VALUES), ctx)
                    {
                        young.check(prof.violations == 0, prof.violations as f64, ctx);
                    }
                }
            }
        }
    }
    vec![el, ai, mono, young]
}

fn derivative_invariants(seed: u64) -> Vec<InvariantResult> {
    let mut de = InvariantResult::new("eps_derivative");
    let mut ga = InvariantResult::new("gateaux_derivative");
    let mut rng = rng_for(seed, 3);
    let cat = catalog();
    let mut k = 0;
    while de.checks < 50 || ga.checks < 100 {
        let e = &cat[k % cat.len()];
        k += 1;
        let p = P_VALUES[k % 3];
        let eps = [1.0, 0.5, 0.25][k % 3];
        let u = random_point(&mut rng, e.space.dim(), 2.5);
        let ctx = || format!("{} p={p} eps={eps} u={u:?}", e.f.label());
        if de.checks < 50 {
            if let (Ok(a), Ok(n)) = (
                eps_derivative(&e.f, &e.space, p, &u, eps),
                eps_derivative_fd(&e.f, &e.space, p, &u, eps),
            ) {
                if a.abs() > 1e-6 {
                    let err = (a - n).abs() / a.abs();
                    de.check(err <= 1e-3, err, ctx);
                }
            }
        }
        if ga.checks < 100 {
            let w = random_point(&mut rng, e.space.dim(), 1.0);
            let nw = e.space.norm(&w).expect("dims match");
            if nw < 1e-3 {
                continue;
            }
            let w: Vec<f64> = w.iter().map(|x| x / nw).collect();
            let params = PowerParams::new(p, eps).expect("valid");
            if let Some((a, n)) = ga.check_result(
                gateaux_directional_check(&e.f, &e.space, &params, &u, &w),
                ctx,
            ) {
                let err = (a - n).abs() / a.abs().max(1.0);
                ga.check(err <= 1e-4, err, ctx);
            }
        }
    }
    vec![de, ga]
}

fn conjugate_invariant() -> InvariantResult {
    let mut r = InvariantResult::new("envelope_conjugate");
    let space = SpaceSpec::euclidean(1);
    let grid = GridSpec::line(-8.0, 8.0, 3201).expect("valid grid");
    let h = grid.step(0);
    let cases: Vec<(ConvexFn, Vec<f64>)> = vec![
        (ConvexFn::one_norm(), vec![-0.9, -0.5, 0.0, 0.3, 0.8]),
        (
            ConvexFn::scalar_quadratic(2.0).expect("PSD"),
            vec![-2.0, -0.5, 0.0, 1.0, 2.5],
        ),
        (
            ConvexFn::indicator_box(vec![-1.0], vec![1.0]).expect("box"),
            vec![-2.0, -0.5, 0.0, 1.5, 3.0],
        ),
        (
            ConvexFn::indicator_point(vec![0.3]).expect("point"),
            vec![-2.0, 0.0, 1.0, 2.0, 3.0],
        ),
        (ConvexFn::zero(), vec![0.0]),
        (
            ConvexFn::max_affine_1d(&[(-1.0, 0.0), (0.5, 0.2), (2.0, -1.0)]).expect("pieces"),
            vec![-0.8, 0.0, 0.5, 1.2, 1.9],
        ),
    ];
    for (f, xis) in cases {
        for p in [2.0, 3.0] {
            let params = PowerParams::new(p, 0.5).expect("valid");
            let xis: Vec<Vec<f64>> = xis.iter().map(|x| vec![*x]).collect();
            let ctx = || format!("{} p={p}", f.label());
            if let Some(pairs) =
                r.check_result(envelope_conjugates(&f, &space, &params, &xis, &grid), ctx)
            {
                for pair in pairs {
                    let tol = 2.0 * h * (1.0 + pair.xi[0].abs()) + 1e-6;
                    let gap = pair
                        .analytic
                        .map_or(f64::INFINITY, |a| (a - pair.numeric).abs());
                    r.check(gap <= tol, gap, || format!("{} xi={:?}", ctx(), pair.xi));
                }
            }
        }
    }
    r
}

fn mosco_invariants() -> Vec<InvariantResult> {
    let mut li = InvariantResult::new("mosco_liminf");
    let mut re = InvariantResult::new("mosco_recovery");
    let mut en = InvariantResult::new("mosco_envelope_gap");
    let mut di = InvariantResult::new("mosco_diagonal");
    let n_max = 64;
    let params = PowerParams::new(2.0, 1.0).expect("valid");
    for name in FIXTURE_NAMES.iter().chain([mosco::POINT_FIXTURE].iter()) {
        let fx = mosco::fixture(name).expect("shipped fixture");
        let ctx = || name.to_string();
        if let Some(rep) = li.check_result(mosco::liminf_check(&fx.seq, &fx.grid, n_max, 1e-6), ctx)
        {
            li.check(rep.violations == 0, rep.worst_excess, ctx);
        }
        if let Some(rep) =
            re.check_result(mosco::recovery_check(&fx.seq, &fx.grid, n_max, 1e-6), ctx)
        {
            re.check(rep.violations == 0, rep.worst_excess, ctx);
        }
        if let Some(rep) = en.check_result(
            mosco::envelope_preserves(&fx.seq, &fx.space, &params, &fx.grid, n_max, fx.burn_in),
            ctx,
        ) {
            let g = rep.final_gap();
            en.check(
                g <= 2.0 / n_max as f64 && rep.monotone_violations == 0,
                g,
                ctx,
            );
        }
        if let Some(rep) = di.check_result(
            mosco::diagonal_convergence(&fx.seq, &fx.space, 2.0, fx.eps_schedule, &fx.grid, n_max),
            ctx,
        ) {
            match &rep.divergence {
                None => {
                    let g = rep.final_gap();
                    di.check(g <= 1.0 / n_max as f64 + (fx.eps_schedule)(n_max), g, ctx);
                }
                Some(d) => {
                    let ok = d.growth_failures == 0
                        && d.qualifying_nodes > 0
                        && d.min_qualifying_value > mosco::DIVERGENCE_THRESHOLD;
                    di.check(ok, d.min_qualifying_value, || format!("{name}: {d:?}"));
                }
            }
        }
    }
    vec![li, re, en, di]
}

fn hj_invariant() -> InvariantResult {
    let mut r = InvariantResult::new("hj_residual");
    let space = SpaceSpec::euclidean(1);
    for h in [0.05, 0.025] {
        let grid = GridSpec::line(-2.0, 2.0, (4.0 / h) as usize + 1).expect("valid grid");
        let t = linspace(0.5, 1.5, (1.0 / h) as usize + 1);
        for (f, bound) in [
            (ConvexFn::scalar_quadratic(1.0).expect("PSD"), 5.0 * h * h),
            (ConvexFn::one_norm(), 3.0 * h),
        ] {
            let ctx = || format!("{} h={h}", f.label());
            let res = lax_oleinik(&f, &space, 2.0, &grid, &t)
                .and_then(|field| hj_residual(&field, &space, 2.0));
            if let Some(res) = r.check_result(res, ctx) {
                r.check(res.max_residual <= bound, res.max_residual, ctx);
            }
        }
    }
    r
}

fn flow_invariants(seed: u64) -> Vec<InvariantResult> {
    let mut dis = InvariantResult::new("flow_energy_dissipation");
    let mut con = InvariantResult::new("flow_resolvent_contraction");
    let mut exp = InvariantResult::new("flow_exponential_formula");
    let mut rng = rng_for(seed, 4);
    for e in catalog() {
        let u0 =
            e.f.feasible_point(&random_point(&mut rng, e.space.dim(), 2.0));
        for p in [2.0, 3.0] {
            let ctx = || format!("{} p={p} u0={u0:?}", e.f.label());
            if let Some(traj) =
                dis.check_result(minimizing_movement(&e.f, &e.space, p, 0.2, 8, &u0), ctx)
            {
                let bad = traj.dissipation_violations(&e.space).expect("dims match");
                let uncertified = traj.residuals.iter().filter(|r| !(**r <= 1e-6)).count();
                dis.check(
                    bad == 0 && uncertified == 0,
                    (bad + uncertified) as f64,
                    ctx,
                );
            }
        }
        if e.space.is_euclidean() {
            let params = PowerParams::new(2.0, 0.5).expect("valid");
            for _ in 0..5 {
                let a = random_point(&mut rng, e.space.dim(), 3.0);
                let b = random_point(&mut rng, e.space.dim(), 3.0);
                let ctx = || format!("{} a={a:?} b={b:?}", e.f.label());
                let pair = prox(&e.f, &e.space, &params, &a)
                    .and_then(|ja| Ok((ja, prox(&e.f, &e.space, &params, &b)?)));
                if let Some((ja, jb)) = con.check_result(pair, ctx) {
                    let d = |x: &[f64], y: &[f64]| {
                        x.iter()
                            .zip(y)
                            .map(|(s, t)| (s - t).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    };
                    let excess = d(&ja.minimizer, &jb.minimizer) - d(&a, &b);
                    con.check(excess <= 1e-9, excess, ctx);
                }
            }
        }
    }
    let q = ConvexFn::scalar_quadratic(1.0).expect("PSD");
    if let Some(rows) = exp.check_result(
        exponential_formula_check(
            &q,
            &SpaceSpec::euclidean(1),
            1.0,
            &[1, 4, 16, 64, 256, 1024],
            &[1.0],
        ),
        || "quadratic".into(),
    ) {
        let last = rows.last().expect("non-empty").error;
        let decreasing = rows.windows(2).all(|w| w[1].error < w[0].error);
        exp.check(decreasing && last <= 5e-4, last, || format!("{rows:?}"));
    }
    vec![dis, con, exp]
}

/// Runs every invariant; the result depends only on `seed`.
pub fn run_suite(seed: u64) -> VerifySummary {
    let mut invariants = duality_invariants(seed);
    invariants.push(convexity_invariant(seed));
    invariants.extend(envelope_invariants(seed));
    invariants.extend(derivative_invariants(seed));
    invariants.push(conjugate_invariant());
    invariants.extend(mosco_invariants());
    invariants.push(hj_invariant());
    invariants.extend(flow_invariants(seed));
    let total_checks = invariants.iter().map(|i| i.checks).sum();
    let total_violations = invariants.iter().map(|i| i.failed()).sum();
    VerifySummary {
        seed,
        invariants,
        total_checks,
        total_violations,
    }
}
