//! Independent verification of decoded solutions: re-featurize the graph
//! with the descriptor modules and check every specification bound plus the
//! target property range.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::chemgraph::Element;
use crate::cycleconf::canonicalize_cycle;
use crate::error::Result;
use crate::features::{self, DescriptorDictionary, FeaturizeParams};
use crate::regress::Hyperplane;
use crate::twolayer::AdjacencyConfig;

use super::build::{names, BuildContext};
use super::decode::DecodedGraph;
use super::spec::Specification;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub all_passed: bool,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        let check = Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        };
        self.all_passed &= check.passed;
        self.checks.push(check);
    }

    fn bound(&mut self, name: impl Into<String>, value: u32, (lb, ub): (u32, u32)) {
        let passed = (lb..=ub).contains(&value);
        self.push(name, passed, format!("value {value}, bounds [{lb}, {ub}]"));
    }
}

/// Recomputes every counted quantity of the decoded graph with the
/// featurization modules and checks the specification bounds and the target
/// property range. Failures are report entries, not errors.
pub fn verify_solution(
    decoded: &DecodedGraph,
    spec: &Specification,
    hyperplane: &Hyperplane,
    dict: &DescriptorDictionary,
) -> Result<VerificationReport> {
    let mut report = VerificationReport {
        all_passed: true,
        checks: Vec::new(),
    };
    let params = FeaturizeParams {
        rho: spec.rho,
        c_min: spec.c_min,
        c_max: spec.c_max,
        lambda: spec.lambda.clone(),
        with_cc: true,
    };
    let profile = features::profile_molecule("decoded", &decoded.graph, &params)?;
    let s = &profile.survey;
    let g = &decoded.graph;

    report.bound("n", s.n_heavy, spec.n_bounds());
    report.bound("n_int", s.n_interior, spec.n_int_bounds());

    for el in &spec.lambda {
        let total = g.atoms().iter().filter(|a| *a == el).count() as u32;
        let interior = s.na_int.get(el).copied().unwrap_or(0);
        let exterior = total - interior;
        report.bound(
            format!("na_int[{el}]"),
            interior,
            spec.na_bounds(&spec.bounds.na_int, *el),
        );
        report.bound(
            format!("na_ex[{el}]"),
            exterior,
            spec.na_bounds(&spec.bounds.na_ex, *el),
        );
        report.bound(
            format!("na[{el}]"),
            total,
            spec.na_bounds(&spec.bounds.na, *el),
        );
    }
    // Elements outside lambda must not appear at all.
    for el in Element::all() {
        if !spec.lambda.contains(&el) {
            let count = g.atoms().iter().filter(|a| **a == el).count();
            report.push(
                format!("element_availability[{el}]"),
                count == 0,
                format!("{count} atoms of {el}"),
            );
        }
    }

    // Fringe configurations: availability plus bounds.
    let available: std::collections::BTreeSet<&String> =
        spec.fringe_per_node.values().flatten().collect();
    for (code, &count) in &s.fc {
        if !available.contains(code) {
            report.push(
                format!("fc_availability[{code}]"),
                false,
                format!("{count} fringe trees with unavailable code"),
            );
        }
    }
    for code in &available {
        let count = s.fc.get(*code).copied().unwrap_or(0);
        report.bound(format!("fc[{code}]"), count, spec.fc_bounds(code));
    }

    // Interior adjacency/edge configurations (canonical counting).
    let mut ac_counts: BTreeMap<AdjacencyConfig, u32> = BTreeMap::new();
    for (ac, &c) in &s.ac_int {
        *ac_counts.entry(*ac).or_insert(0) += c;
    }
    for (ac, &count) in &ac_counts {
        let known = spec.gamma_ac_int.contains(ac);
        report.push(
            format!("ac_int_availability[{ac}]"),
            known,
            format!("count {count}"),
        );
        if known {
            report.bound(format!("ac_int[{ac}]"), count, spec.ac_int_bounds(ac));
        }
    }
    for (ec, &count) in &s.ec_int {
        let known = spec.gamma_ec_int.contains(ec);
        report.push(
            format!("ec_int_availability[{ec}]"),
            known,
            format!("count {count}"),
        );
        if known {
            report.bound(format!("ec_int[{ec}]"), count, spec.ec_int_bounds(ec));
        }
    }
    for (ac, &count) in &s.ac_lf {
        let known = spec.gamma_ac_lf.contains(ac);
        report.push(
            format!("ac_lf_availability[{ac}]"),
            known,
            format!("count {count}"),
        );
        if known {
            report.bound(format!("ac_lf[{ac}]"), count, spec.ac_lf_bounds(ac));
        }
    }

    // Each ring node's realized cycle must carry its assigned configuration.
    for (&u, choice) in &decoded.trace.ring {
        let cycle_vertices: Vec<usize> = (1..=choice.xi.len())
            .map(|p| decoded.slot_vertex[&(u, p)])
            .collect();
        // Vertex ids equal suppressed ids here: interior vertices come first
        // in construction order.
        let ranks: Vec<u32> = {
            let masses: Vec<u64> = cycle_vertices.iter().map(|v| s.fringe_mass[v]).collect();
            let mut distinct = masses.clone();
            distinct.sort_unstable();
            distinct.dedup();
            masses
                .iter()
                .map(|m| (distinct.binary_search(m).unwrap() + 1) as u32)
                .collect()
        };
        let observed = canonicalize_cycle(&ranks);
        report.push(
            format!("cycle_configuration[node {u}]"),
            observed == choice.xi,
            format!("assigned {}, realized {observed}", choice.xi),
        );
    }

    // Property range via the trained hyperplane on recomputed features.
    match features::featurize_all(std::slice::from_ref(&profile), dict) {
        Ok(matrix) => {
            let eta = hyperplane.predict_row(&matrix.rows[0]);
            let passed = spec.y_lb - 1e-9 <= eta && eta <= spec.y_ub + 1e-9;
            report.push(
                "property_range",
                passed,
                format!("eta {eta}, range [{}, {}]", spec.y_lb, spec.y_ub),
            );
        }
        Err(e) => {
            report.push(
                "property_range",
                false,
                format!("featurization failed: {e}"),
            );
        }
    }
    Ok(report)
}

/// Compares every descriptor variable in a solution against the values
/// recomputed from the decoded graph. Exact equality for integers, 1e-6 for
/// the average mass.
pub fn compare_descriptor_variables(
    sol: &HashMap<String, f64>,
    decoded: &DecodedGraph,
    spec: &Specification,
) -> Result<Vec<Check>> {
    let ctx = BuildContext::new(spec)?;
    let params = FeaturizeParams {
        rho: spec.rho,
        c_min: spec.c_min,
        c_max: spec.c_max,
        lambda: spec.lambda.clone(),
        with_cc: true,
    };
    let profile = features::profile_molecule("decoded", &decoded.graph, &params)?;
    let s = &profile.survey;
    let g = &decoded.graph;
    let mut checks = Vec::new();
    let mut cmp = |name: String, got: Option<&f64>, want: f64, tol: f64| {
        let (passed, detail) = match got {
            None => (false, "missing in solution".to_string()),
            Some(&v) => (
                (v - want).abs() <= tol,
                format!("solution {v}, recomputed {want}"),
            ),
        };
        checks.push(Check {
            name,
            passed,
            detail,
        });
    };

    cmp(
        names::ng(),
        sol.get(&names::ng()),
        f64::from(s.n_heavy),
        0.0,
    );
    cmp(
        names::rank(),
        sol.get(&names::rank()),
        f64::from(s.rank),
        0.0,
    );
    cmp(
        names::nint(),
        sol.get(&names::nint()),
        f64::from(s.n_interior),
        0.0,
    );
    cmp(
        names::mass(),
        sol.get(&names::mass()),
        g.mass_star() as f64,
        0.0,
    );
    cmp(
        names::msavg(),
        sol.get(&names::msavg()),
        g.mass_star() as f64 / g.n_atoms() as f64,
        1e-6,
    );
    for d in 1..=4 {
        cmp(
            names::dg(d),
            sol.get(&names::dg(d)),
            f64::from(s.dg_interior[d - 1]),
            0.0,
        );
        cmp(
            names::dgint(d),
            sol.get(&names::dgint(d)),
            f64::from(s.dg_int[d - 1]),
            0.0,
        );
    }
    for mult in 1..=3 {
        cmp(
            names::bd(mult),
            sol.get(&names::bd(mult)),
            f64::from(s.bd_int[mult - 1]),
            0.0,
        );
    }
    for (a, el) in ctx.lambda.iter().enumerate() {
        let total = g.atoms().iter().filter(|x| *x == el).count() as f64;
        let interior = f64::from(s.na_int.get(el).copied().unwrap_or(0));
        cmp(names::naint(a), sol.get(&names::naint(a)), interior, 0.0);
        cmp(
            names::naex(a),
            sol.get(&names::naex(a)),
            total - interior,
            0.0,
        );
        cmp(names::na(a), sol.get(&names::na(a)), total, 0.0);
    }
    for (f, info) in ctx.fringes.iter().enumerate() {
        let count = s.fc.get(&info.code).copied().unwrap_or(0);
        cmp(names::fc(f), sol.get(&names::fc(f)), f64::from(count), 0.0);
    }
    for (j, ac) in ctx.spec.gamma_ac_lf.iter().enumerate() {
        let count = s.ac_lf.get(ac).copied().unwrap_or(0);
        cmp(
            names::aclf(j),
            sol.get(&names::aclf(j)),
            f64::from(count),
            0.0,
        );
    }
    for (c, ac) in ctx.spec.gamma_ac_int.iter().enumerate() {
        let canonical = AdjacencyConfig::canonical(ac.a, ac.b, ac.m);
        let count = s.ac_int.get(&canonical).copied().unwrap_or(0);
        cmp(
            names::acint(c),
            sol.get(&names::acint(c)),
            f64::from(count),
            0.0,
        );
    }
    for (t, ec) in ctx.spec.gamma_ec_int.iter().enumerate() {
        let canonical = crate::twolayer::EdgeConfig::canonical(ec.a, ec.da, ec.b, ec.db, ec.m);
        let count = s.ec_int.get(&canonical).copied().unwrap_or(0);
        cmp(
            names::ecint(t),
            sol.get(&names::ecint(t)),
            f64::from(count),
            0.0,
        );
    }
    for (k, xi) in ctx.xi_global.iter().enumerate() {
        let count = profile.cc.get(xi).copied().unwrap_or(0);
        cmp(names::cc(k), sol.get(&names::cc(k)), f64::from(count), 0.0);
    }
    Ok(checks)
}
