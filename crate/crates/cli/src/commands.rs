use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use degen_eigen::barrier::{lambda_big_and_solution_bounds, lambda_threshold, sup_inf_bound};
use degen_eigen::eigen::{derivative_bounds_check, estimate_lambda_with, EigenOptions};
use degen_eigen::grid::{solve_grid_bvp, FieldState, GridDomain, Status};
use degen_eigen::radial::{eigen_radial_with_steps, scaling_invariant_check, solve_radial_bvp, RadialOutcome, RadialProblem};
use degen_eigen::verify::verify_solution;
use degen_eigen::Error;
use serde_json::{json, Value};

use crate::config::{self, Command, Prepared};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NO_SOLUTION: u8 = 2;
pub const EXIT_CONDITION: u8 = 3;
pub const EXIT_CONFIG: u8 = 4;

/// Files to write and the exit code of a finished run.
pub struct Artifacts {
    pub summary: Value,
    pub files: Vec<(&'static str, String)>,
    pub code: u8,
}

/// Library failures: configuration-type errors exit 4, the rest count as no solution.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Unsupported(_) | Error::MissingParameter(_) | Error::Domain(_) => EXIT_CONFIG,
        Error::Coercivity(_) => EXIT_CONDITION,
        _ => EXIT_NO_SOLUTION,
    }
}

pub struct Run<'a> {
    pub prepared: &'a Prepared,
    pub seed: u64,
    pub jobs: usize,
}

impl Run<'_> {
    pub fn execute(&self) -> Result<Artifacts, Error> {
        let mut a = match self.prepared.command {
            Command::CheckOperator => self.check_operator()?,
            Command::Barriers => self.barriers()?,
            Command::SolveRadial => self.solve_radial()?,
            Command::SolveGrid => self.solve_grid()?,
            Command::EigenRadial => self.eigen_radial()?,
            Command::EigenGrid => self.eigen_grid()?,
            Command::SweepLambda => self.sweep_lambda()?,
            Command::Verify => self.verify()?,
        };
        let c = &self.prepared.config;
        let head = json!({
            "command": self.prepared.command.name(),
            "operator": c.operator,
            "seed": self.seed,
            "exit_code": a.code,
        });
        if let (Value::Object(s), Value::Object(h)) = (&mut a.summary, head) {
            s.extend(h);
        }
        Ok(a)
    }

    fn domain(&self) -> &GridDomain {
        self.prepared.domain.as_ref().expect("validated")
    }

    fn check_operator(&self) -> Result<Artifacts, Error> {
        let op = self.prepared.config.operator;
        let report = op.check_conditions(self.seed, self.prepared.config.trials.unwrap_or(2000));
        let profile = op.profile()?;
        let margins = json!({
            "A": -report.a.worst, "B": -report.b.worst, "C": -report.c.worst, "D": -report.d.worst,
        });
        let code = if report.required_pass() { EXIT_OK } else { EXIT_CONDITION };
        let summary = json!({
            "conditions": report,
            "required_pass": report.required_pass(),
            "margins": margins,
            "case": profile.case,
            "sigma": profile.sigma,
            "m1_hat": profile.m1_hat,
            "m4_hat": profile.m4_hat,
            "s_cross": profile.s_cross,
        });
        Ok(Artifacts { summary, files: vec![("profile.csv", profile.to_csv())], code })
    }

    fn barriers(&self) -> Result<Artifacts, Error> {
        let c = &self.prepared.config;
        let op = c.operator;
        let dom = self.domain();
        let (_, nu) = dom.weight_bounds();
        let (_, r_o) = dom.out_ball();
        let lam = c.lambda.unwrap_or(0.0);
        let threshold = lambda_threshold(&op, nu, dom.diameter(), c.rho.or(dom.default_rho()))?;
        let big = lambda_big_and_solution_bounds(&op, nu, r_o, lam, dom.boundary_min, dom.boundary_max)?;
        let sup_inf = sup_inf_bound(&op, dom.boundary_max, dom.boundary_min, c.f_plus.unwrap_or(0.0), c.f_minus.unwrap_or(0.0), r_o)?;
        let summary = json!({
            "reports": [threshold, big, sup_inf],
            "lambda": lam,
            "nu": nu,
            "R_o": r_o,
            "diameter": dom.diameter(),
        });
        Ok(Artifacts { summary, files: Vec::new(), code: EXIT_OK })
    }

    fn solve_radial(&self) -> Result<Artifacts, Error> {
        let c = &self.prepared.config;
        let radius = config::radius(c).map_err(Error::Input)?;
        let lam = c.lambda.expect("validated");
        let p = RadialProblem {
            a0: config::weight(c),
            steps: c.solver.steps,
            tol: c.solver.tol.unwrap_or(1e-5),
            ..RadialProblem::new(c.operator, radius, config::delta(c), lam)
        };
        match solve_radial_bvp(&p)? {
            RadialOutcome::Solved(s) => {
                let mut checks = BTreeMap::new();
                let inner = s.v[..s.v.len() - 1].iter().cloned().fold(f64::INFINITY, f64::min);
                checks.insert("positive", s.v.iter().cloned().fold(f64::INFINITY, f64::min));
                checks.insert("monotone", if s.monotone { 0.0 } else { -1.0 });
                checks.insert("strong_minimum", inner - p.delta);
                checks.insert("residual", p.tol - s.residual_sup);
                // Blow-up rate against the ball eigenvalue, scaled by the weight.
                let eig = eigen_radial_with_steps(&c.operator, radius, 1e-9, c.solver.steps)?;
                let lam_star = eig.lambda_star / p.a0;
                if lam > 0.0 && lam < lam_star {
                    let k = c.operator.signature().k;
                    let bound = p.delta * (1.0 + k * lam / (lam_star - lam));
                    checks.insert("blowup_rate", (s.v0 - 0.95 * bound) / bound);
                }
                let passed = checks.values().all(|m| *m >= 0.0);
                let summary = json!({
                    "solution": s.summary_json(),
                    "lambda_star": lam_star,
                    "margins": checks,
                    "checks_passed": passed,
                });
                Ok(Artifacts { summary, files: vec![("profile.csv", s.to_csv())], code: EXIT_OK })
            }
            RadialOutcome::Infeasible { zero_radius, v_at_radius, v0_needed } => {
                let summary = json!({
                    "status": "infeasible",
                    "lambda": lam,
                    "zero_radius": zero_radius,
                    "v_at_radius": v_at_radius,
                    "v0_needed": v0_needed,
                });
                Ok(Artifacts { summary, files: Vec::new(), code: EXIT_NO_SOLUTION })
            }
        }
    }

    fn solve_grid(&self) -> Result<Artifacts, Error> {
        let c = &self.prepared.config;
        let dom = self.domain();
        let lam = c.lambda.expect("validated");
        let s = solve_grid_bvp(&c.operator, dom, lam, &config::solve_options(&c.solver))?;
        let mut files = vec![("field.csv", s.to_csv(dom))];
        let mut summary = field_summary(&s);
        if s.status != Status::Converged {
            return Ok(Artifacts { summary, files, code: EXIT_NO_SOLUTION });
        }
        let report = verify_solution(&c.operator, &s, dom)?;
        summary["margins"] = margins(&report);
        summary["checks_passed"] = json!(report.passed);
        files.push(("report.json", pretty(&report)));
        Ok(Artifacts { summary, files, code: EXIT_OK })
    }

    fn eigen_radial(&self) -> Result<Artifacts, Error> {
        let c = &self.prepared.config;
        let radius = config::radius(c).map_err(Error::Input)?;
        let tol = c.solver.tol.unwrap_or(1e-9);
        let e = eigen_radial_with_steps(&c.operator, radius, tol, c.solver.steps)?;
        let a0 = config::weight(c);
        let mut summary = json!({
            "lambda_star": e.lambda_star / a0,
            "iterations": e.iterations,
            "residual": (e.zero_radius - radius).abs() / radius,
            "zero_radius": e.zero_radius,
            "radius": radius,
            "profile_residual": e.profile.residual_sup,
        });
        if let Some(radii) = &c.radii {
            let r = scaling_invariant_check(&c.operator, radii, 1e-3)?;
            summary["margins"] = json!({ "scaling": r.tol - r.spread });
            summary["scaling"] = json!(r);
        }
        Ok(Artifacts { summary, files: vec![("profile.csv", e.profile.to_csv())], code: EXIT_OK })
    }

    fn eigen_grid(&self) -> Result<Artifacts, Error> {
        let c = &self.prepared.config;
        let dom = self.domain();
        let opts = EigenOptions { solve: config::solve_options(&c.solver), rho: c.rho, ..EigenOptions::default() };
        let b = estimate_lambda_with(&c.operator, dom, config::delta(c), c.bracket_tol.unwrap_or(0.02), &opts)?;
        let mut worst = f64::INFINITY;
        for e in b.feasible() {
            let m = e.m_lam.expect("converged entry");
            let bound = b.delta * (1.0 + b.k * e.lam / (b.lam_hi - e.lam));
            worst = worst.min((m - 0.95 * bound) / bound);
        }
        let summary = json!({
            "lam_lo": b.lam_lo,
            "lam_hi": b.lam_hi,
            "midpoint": b.midpoint(),
            "solves": b.history.len(),
            "bracket": b,
            "margins": { "blowup_rate": worst },
        });
        Ok(Artifacts { summary, files: Vec::new(), code: EXIT_OK })
    }

    fn sweep_lambda(&self) -> Result<Artifacts, Error> {
        let c = &self.prepared.config;
        let dom = self.domain();
        let lams = config::lambda_grid(c).map_err(Error::Input)?;
        let opts = config::solve_options(&c.solver);
        let results = fan_out(lams.len(), self.jobs, |i| solve_grid_bvp(&c.operator, dom, lams[i], &opts));
        let states: Vec<FieldState> = results.into_iter().collect::<Result<_, _>>()?;

        let probes: Vec<(f64, f64)> = match &c.probes {
            Some(p) => p.iter().map(|q| (q[0], q[1])).collect(),
            None => default_probes(dom),
        };
        let nodes: Vec<usize> = probes.iter().filter_map(|&(x, y)| dom.nearest_node(x, y)).collect();
        let rows: Vec<Value> = states
            .iter()
            .map(|s| json!({ "lambda": s.lam, "status": s.status, "iterations": s.iteration, "sup": s.sup(), "inf": s.inf() }))
            .collect();
        let mut summary = json!({ "solves": rows });
        if let Some(bad) = states.iter().find(|s| s.status != Status::Converged) {
            summary["first_failure"] = json!(bad.lam);
            return Ok(Artifacts { summary, files: Vec::new(), code: EXIT_NO_SOLUTION });
        }
        let points: Vec<(f64, f64)> = nodes.iter().map(|&l| dom.position(l)).collect();
        let values: Vec<Vec<f64>> = states
            .iter()
            .map(|s| {
                let f = dom.lattice_field(&s.u);
                nodes.iter().map(|&l| f[l]).collect()
            })
            .collect();
        let sups: Vec<f64> = states.iter().map(FieldState::sup).collect();
        let k = c.operator.signature().k;
        let report = derivative_bounds_check(&lams, &points, &values, &sups, dom.boundary_min, k, 0.1);
        summary["margins"] = json!({ "derivative": report.margin });
        summary["checks_passed"] = json!(report.passed);
        let last = states.last().expect("at least two lambdas");
        Ok(Artifacts {
            summary,
            files: vec![("field.csv", last.to_csv(dom)), ("report.json", pretty(&report))],
            code: EXIT_OK,
        })
    }

    fn verify(&self) -> Result<Artifacts, Error> {
        let c = &self.prepared.config;
        let dom = self.domain();
        let u = FieldState::from_values(self.prepared.field.clone().expect("validated"), c.lambda.expect("validated"));
        let report = verify_solution(&c.operator, &u, dom)?;
        let summary = json!({
            "lambda": u.lam,
            "checks_passed": report.passed,
            "margins": margins(&report),
            "skipped": report.skipped,
        });
        let code = if report.passed { EXIT_OK } else { EXIT_CONDITION };
        Ok(Artifacts { summary, files: vec![("report.json", pretty(&report))], code })
    }
}

fn field_summary(s: &FieldState) -> Value {
    json!({
        "lambda": s.lam,
        "status": s.status,
        "iterations": s.iteration,
        "residual_sup": s.residual_sup,
        "sup": s.sup(),
        "inf": s.inf(),
    })
}

fn margins(r: &degen_eigen::verify::VerificationReport) -> Value {
    let m: BTreeMap<&str, f64> = r.checks.iter().map(|c| (c.check_id.as_str(), c.margin)).collect();
    json!(m)
}

pub fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Twenty points on rings at 20%, 40%, 60% and 80% of the out-ball radius.
fn default_probes(dom: &GridDomain) -> Vec<(f64, f64)> {
    let ((cx, cy), r) = dom.out_ball();
    let mut out = Vec::new();
    for ring in 1..=4 {
        let rad = 0.2 * ring as f64 * r;
        for j in 0..5 {
            let a = (j as f64 + 0.5 * ring as f64) * std::f64::consts::TAU / 5.0;
            out.push((cx + rad * a.cos(), cy + rad * a.sin()));
        }
    }
    out
}

/// Runs `f(0..n)` on up to `jobs` threads; results come back in index order.
fn fan_out<T: Send>(n: usize, jobs: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let done = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, n.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = f(i);
                done.lock().unwrap()[i] = Some(r);
            });
        }
    });
    slots.into_iter().map(|s| s.expect("every index ran")).collect()
}
