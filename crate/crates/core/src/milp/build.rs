//! MILP construction for a seed-tree specification: ring-node cycle gadgets,
//! fringe assignment, degree/bond/element accounting, configuration
//! descriptors, and the hyperplane property constraint.

use std::collections::BTreeMap;

use crate::chemgraph::Element;
use crate::cycleconf::CycleConfig;
use crate::error::{Error, Result};
use crate::features::{DescriptorDictionary, DescriptorKey};
use crate::fringetree::{self, CanonicalTreeCode, RootedTree};
use crate::regress::Hyperplane;
use crate::twolayer::AdjacencyConfig;

use super::model::{Cmp, MilpModel, Objective, VarKind, VarRole};
use super::spec::Specification;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    pub fn tag(self) -> char {
        match self {
            Direction::Plus => 'p',
            Direction::Minus => 'm',
        }
    }
}

/// Start positions mu0 such that assigning `xi` at mu0 in direction `delta`
/// puts rank `r` on vertex `mu`. Index arithmetic is modulo |xi|, mapped into
/// [1, |xi|].
pub fn xi_hat(xi: &CycleConfig, r: u32, mu: usize, delta: Direction) -> Vec<usize> {
    let l = xi.len() as i64;
    let mut out = Vec::new();
    if mu > xi.len() {
        return out;
    }
    for mu0 in 1..=xi.len() {
        let offset = match delta {
            Direction::Plus => (mu as i64 - mu0 as i64).rem_euclid(l),
            Direction::Minus => (mu0 as i64 - mu as i64).rem_euclid(l),
        };
        if xi.ranks()[offset as usize] == r {
            out.push(mu0);
        }
    }
    out
}

/// Ring-node gadget geometry: c_max vertices, 2*c_max - c_min edges, one
/// l-cycle activated per chosen configuration length.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Gadget {
    pub c_min: usize,
    pub c_max: usize,
}

impl Gadget {
    pub fn n_edges(self) -> usize {
        2 * self.c_max - self.c_min
    }

    /// 1-based endpoints (i1, i2) with i1 < i2 of gadget edge i.
    pub fn endpoints(self, i: usize) -> (usize, usize) {
        assert!((1..=self.n_edges()).contains(&i));
        if i < self.c_max {
            (i, i + 1)
        } else if i == self.c_max {
            (1, self.c_max)
        } else {
            (1, i - self.c_max + self.c_min - 1)
        }
    }

    /// Gadget edges incident to vertex mu.
    pub fn edges_at(self, mu: usize) -> Vec<usize> {
        (1..=self.n_edges())
            .filter(|&i| {
                let (a, b) = self.endpoints(i);
                a == mu || b == mu
            })
            .collect()
    }

    /// True when gadget edge i is part of the l-cycle.
    pub fn edge_active(self, i: usize, l: usize) -> bool {
        if i < self.c_min {
            true
        } else if i <= self.c_max - 2 {
            l > i
        } else if i <= self.c_max {
            l == self.c_max
        } else {
            l == i - self.c_max + self.c_min - 1
        }
    }

    /// The edge set of the l-cycle, in traversal order u1..ul.
    pub fn cycle_edges(self, l: usize) -> Vec<usize> {
        (1..=self.n_edges())
            .filter(|&i| self.edge_active(i, l))
            .collect()
    }
}

/// Per-fringe-tree constants used by the constraint families.
#[derive(Debug, Clone)]
pub(crate) struct FringeInfo {
    pub code: String,
    pub stats: CanonicalTreeCode,
    /// Count of non-root heavy vertices with in-tree suppressed degree d,
    /// for d = 1..=4 (their degree in the assembled graph).
    pub exterior_deg: [u32; 4],
}

fn exterior_degree_counts(tree: &RootedTree) -> [u32; 4] {
    fn walk(t: &RootedTree, is_root: bool, acc: &mut [u32; 4]) {
        if !is_root {
            let d = t.children.len() + 1;
            if (1..=4).contains(&d) {
                acc[d - 1] += 1;
            }
        }
        for (_, c) in &t.children {
            walk(c, false, acc);
        }
    }
    let mut acc = [0u32; 4];
    walk(tree, true, &mut acc);
    acc
}

/// Everything the generator, encoder, and decoder share: global encodings of
/// configurations and the gadget geometry.
pub(crate) struct BuildContext<'s> {
    pub spec: &'s Specification,
    pub gadget: Gadget,
    pub ring_nodes: Vec<usize>,
    pub non_ring_nodes: Vec<usize>,
    /// Tree-edge indices of ring edges.
    pub ring_edges: Vec<usize>,
    pub non_ring_edges: Vec<usize>,
    /// Global cycle-configuration list (sorted union over ring nodes).
    pub xi_global: Vec<CycleConfig>,
    /// Per ring node, indices into `xi_global`.
    pub xi_at: BTreeMap<usize, Vec<usize>>,
    /// Global fringe list (sorted union over nodes) with constants.
    pub fringes: Vec<FringeInfo>,
    /// Per node, indices into `fringes`.
    pub fr_at: BTreeMap<usize, Vec<usize>>,
    pub lambda: Vec<Element>,
    pub m1: f64,
    pub m_ms: f64,
    /// Hydrogen index in lambda.
    pub h_index: usize,
}

impl<'s> BuildContext<'s> {
    pub fn new(spec: &'s Specification) -> Result<BuildContext<'s>> {
        let gadget = Gadget {
            c_min: spec.c_min,
            c_max: spec.c_max,
        };
        let ring_nodes: Vec<usize> = spec.seed_tree.ring_nodes().collect();
        let non_ring_nodes: Vec<usize> = spec.seed_tree.non_ring_nodes().collect();
        let ring_edges: Vec<usize> = spec.seed_tree.ring_edges().collect();
        let non_ring_edges: Vec<usize> = spec.seed_tree.non_ring_edges().collect();

        let mut xi_global: Vec<CycleConfig> =
            spec.xi_per_ring_node.values().flatten().cloned().collect();
        xi_global.sort();
        xi_global.dedup();
        let xi_at: BTreeMap<usize, Vec<usize>> = spec
            .xi_per_ring_node
            .iter()
            .map(|(&u, xis)| {
                let idx = xis
                    .iter()
                    .map(|x| xi_global.binary_search(x).expect("xi in global list"))
                    .collect();
                (u, idx)
            })
            .collect();

        let mut codes: Vec<String> = spec.fringe_per_node.values().flatten().cloned().collect();
        codes.sort();
        codes.dedup();
        let fringes: Vec<FringeInfo> = codes
            .iter()
            .map(|code| -> Result<FringeInfo> {
                let tree = fringetree::parse_code(code)?;
                let stats = fringetree::canonicalize(&tree);
                let exterior_deg = exterior_degree_counts(&tree);
                Ok(FringeInfo {
                    code: code.clone(),
                    stats,
                    exterior_deg,
                })
            })
            .collect::<Result<_>>()?;
        let fr_at: BTreeMap<usize, Vec<usize>> = spec
            .fringe_per_node
            .iter()
            .map(|(&v, cs)| {
                let idx = cs
                    .iter()
                    .map(|c| codes.binary_search(c).expect("code in global list"))
                    .collect();
                (v, idx)
            })
            .collect();

        let lambda = spec.lambda.clone();
        let h_index = lambda
            .iter()
            .position(|e| e.is_hydrogen())
            .ok_or_else(|| Error::Spec("hydrogen missing from lambda".into()))?;
        let max_fringe_mass = fringes
            .iter()
            .map(|f| f.stats.mass_star())
            .max()
            .unwrap_or(1) as f64;
        let max_elem_mass = lambda.iter().map(|e| e.mass_times_ten()).max().unwrap_or(1) as f64;
        // The average-mass linearization needs |msavg - Mass/i| bounded for
        // every atom-count indicator i, with Mass as large as the biggest
        // molecule and i as small as the smallest: msavg <= max element mass
        // and Mass/i <= max_mass * atm_hi / atm_lo.
        let (n_lb, n_ub) = spec.n_bounds();
        let (h_lb, h_ub) = spec.na_bounds(&spec.bounds.na, Element::HYDROGEN);
        let atm_lo = f64::from((n_lb + h_lb).max(1));
        let atm_hi = f64::from(n_ub + h_ub);
        let m_ms = max_elem_mass * (1.0 + atm_hi / atm_lo);
        Ok(BuildContext {
            spec,
            gadget,
            ring_nodes,
            non_ring_nodes,
            ring_edges,
            non_ring_edges,
            xi_global,
            xi_at,
            fringes,
            fr_at,
            lambda,
            m1: 10.0 * max_fringe_mass,
            m_ms,
            h_index,
        })
    }

    pub fn xi(&self, k: usize) -> &CycleConfig {
        &self.xi_global[k]
    }

    /// Global xi indices at node u whose length is at least `len`.
    pub fn xi_at_least(&self, u: usize, len: usize) -> Vec<usize> {
        self.xi_at[&u]
            .iter()
            .copied()
            .filter(|&k| self.xi_global[k].len() >= len)
            .collect()
    }

    pub fn fringe_index(&self, code: &str) -> Option<usize> {
        self.fringes
            .binary_search_by(|f| f.code.as_str().cmp(code))
            .ok()
    }

    pub fn element_code(&self, el: Element) -> Option<usize> {
        self.lambda.iter().position(|&e| e == el).map(|i| i + 1)
    }

    pub fn ac_code(&self, ac: &AdjacencyConfig) -> Option<usize> {
        self.spec
            .gamma_ac_int
            .iter()
            .position(|g| g == ac)
            .map(|i| i + 1)
    }

    /// Tree edge endpoints ordered by node id.
    pub fn edge_nodes(&self, e: usize) -> (usize, usize) {
        let edge = &self.spec.seed_tree.edges[e];
        (edge.u.min(edge.v), edge.u.max(edge.v))
    }

    /// Both endpoints of a ring edge (smaller id first).
    pub fn ring_edge_sides(&self, e: usize) -> (usize, usize) {
        self.edge_nodes(e)
    }

    /// Hydrogen-count bounds derived from the specification.
    pub fn atm_range(&self) -> (u32, u32) {
        let (n_lb, n_ub) = self.spec.n_bounds();
        let (h_lb, h_ub) = self.spec.na_bounds(&self.spec.bounds.na, Element::HYDROGEN);
        (n_lb + h_lb, n_ub + h_ub)
    }
}

// Variable name builders. Shared by the generator, encoder and decoder so
// every consumer agrees on the naming scheme.
pub(crate) mod names {
    pub fn y(u: usize, p: usize) -> String {
        format!("y_u{u}_p{p}")
    }
    pub fn z(u: usize, r: usize) -> String {
        format!("z_u{u}_r{r}")
    }
    pub fn xstart(u: usize, k: usize, s: usize, dir: char) -> String {
        format!("x_u{u}_xi{k}_s{s}_{dir}")
    }
    pub fn xsel(u: usize, k: usize) -> String {
        format!("xsel_u{u}_xi{k}")
    }
    pub fn cc(k: usize) -> String {
        format!("cc_{k}")
    }
    pub fn gadget_e(u: usize, i: usize) -> String {
        format!("e_u{u}_{i}")
    }
    pub fn xedge(e: usize, u: usize, i: usize) -> String {
        format!("xedge_e{e}_u{u}_g{i}")
    }
    pub fn xnode(e: usize, u: usize, p: usize) -> String {
        format!("xnode_e{e}_u{u}_p{p}")
    }
    pub fn fr_cycle(u: usize, p: usize, f: usize) -> String {
        format!("fr_u{u}_p{p}_f{f}")
    }
    pub fn fr_node(v: usize, f: usize) -> String {
        format!("fr_v{v}_f{f}")
    }
    pub fn fce(e: usize, f: usize) -> String {
        format!("fce_e{e}_f{f}")
    }
    pub fn fc(f: usize) -> String {
        format!("fc_{f}")
    }
    pub fn aclf(j: usize) -> String {
        format!("aclf_{j}")
    }
    pub fn rank() -> String {
        "rank".to_string()
    }
    pub fn nint() -> String {
        "nint".to_string()
    }
    pub fn ng() -> String {
        "ng".to_string()
    }
    pub fn degc(u: usize, p: usize, d: usize) -> String {
        format!("degc_u{u}_p{p}_d{d}")
    }
    pub fn degn(v: usize, d: usize) -> String {
        format!("degn_v{v}_d{d}")
    }
    pub fn dintc(u: usize, p: usize, d: usize) -> String {
        format!("dintc_u{u}_p{p}_d{d}")
    }
    pub fn dintn(v: usize, d: usize) -> String {
        format!("dintn_v{v}_d{d}")
    }
    pub fn dg(d: usize) -> String {
        format!("dg_{d}")
    }
    pub fn dgint(d: usize) -> String {
        format!("dgint_{d}")
    }
    pub fn dge(e: usize, d: usize) -> String {
        format!("dge_e{e}_d{d}")
    }
    pub fn dginte(e: usize, d: usize) -> String {
        format!("dginte_e{e}_d{d}")
    }
    pub fn dgp(e: usize, u: usize, p: usize) -> String {
        format!("dgp_e{e}_u{u}_p{p}")
    }
    pub fn dgm(e: usize, u: usize, p: usize) -> String {
        format!("dgm_e{e}_u{u}_p{p}")
    }
    pub fn beta_g(u: usize, i: usize) -> String {
        format!("beta_u{u}_g{i}")
    }
    pub fn beta_e(e: usize) -> String {
        format!("beta_e{e}")
    }
    pub fn bbin_g(u: usize, i: usize, m: usize) -> String {
        format!("bbin_u{u}_g{i}_m{m}")
    }
    pub fn bbin_e(e: usize, m: usize) -> String {
        format!("bbin_e{e}_m{m}")
    }
    pub fn bd(m: usize) -> String {
        format!("bd_{m}")
    }
    pub fn alpha_c(u: usize, p: usize) -> String {
        format!("alpha_u{u}_p{p}")
    }
    pub fn alpha_n(v: usize) -> String {
        format!("alpha_v{v}")
    }
    pub fn abin_c(u: usize, p: usize, a: usize) -> String {
        format!("abin_u{u}_p{p}_a{a}")
    }
    pub fn abin_n(v: usize, a: usize) -> String {
        format!("abin_v{v}_a{a}")
    }
    pub fn bnode(e: usize, u: usize, p: usize) -> String {
        format!("bnode_e{e}_u{u}_p{p}")
    }
    pub fn bep(e: usize, u: usize, p: usize) -> String {
        format!("bep_e{e}_u{u}_p{p}")
    }
    pub fn bem(e: usize, u: usize, p: usize) -> String {
        format!("bem_e{e}_u{u}_p{p}")
    }
    pub fn nae(e: usize, a: usize) -> String {
        format!("nae_e{e}_a{a}")
    }
    pub fn naint(a: usize) -> String {
        format!("naint_{a}")
    }
    pub fn naex(a: usize) -> String {
        format!("naex_{a}")
    }
    pub fn na(a: usize) -> String {
        format!("na_{a}")
    }
    pub fn atm(i: u32) -> String {
        format!("atm_{i}")
    }
    pub fn mass() -> String {
        "mass".to_string()
    }
    pub fn msavg() -> String {
        "msavg".to_string()
    }
    pub fn acg(u: usize, i: usize, c: usize) -> String {
        format!("ac_u{u}_g{i}_c{c}")
    }
    pub fn ace(e: usize, c: usize) -> String {
        format!("ac_e{e}_c{c}")
    }
    pub fn acint(c: usize) -> String {
        format!("acint_{c}")
    }
    pub fn ecg(u: usize, i: usize, t: usize) -> String {
        format!("ec_u{u}_g{i}_t{t}")
    }
    pub fn ece(e: usize, t: usize) -> String {
        format!("ec_e{e}_t{t}")
    }
    pub fn ecint(t: usize) -> String {
        format!("ecint_{t}")
    }
    pub fn eta() -> String {
        "eta".to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Feasibility,
    Maximize,
    Minimize,
}

/// Builds the full MILP for a specification and a trained hyperplane.
pub fn build_milp(
    spec: &Specification,
    hyperplane: &Hyperplane,
    dict: &DescriptorDictionary,
    sense: ObjectiveSense,
) -> Result<MilpModel> {
    if dict.rho != spec.rho || dict.c_min != spec.c_min || dict.c_max != spec.c_max {
        return Err(Error::MilpBuild(format!(
            "dictionary parameters (rho {}, cycle window [{}, {}]) disagree with the specification (rho {}, [{}, {}])",
            dict.rho, dict.c_min, dict.c_max, spec.rho, spec.c_min, spec.c_max
        )));
    }
    if hyperplane.column_names.len() != hyperplane.weights.len() {
        return Err(Error::MilpBuild(
            "hyperplane column/weight length mismatch".into(),
        ));
    }
    let ctx = BuildContext::new(spec)?;
    let mut m = MilpModel::new("chemical-graph-inference");

    add_cycle_configuration_family(&mut m, &ctx);
    add_ring_edge_family(&mut m, &ctx);
    add_fringe_family(&mut m, &ctx);
    add_degree_family(&mut m, &ctx);
    add_bond_family(&mut m, &ctx);
    add_element_family(&mut m, &ctx);
    add_adjacency_family(&mut m, &ctx);
    add_edge_config_family(&mut m, &ctx);
    add_hyperplane(&mut m, &ctx, hyperplane)?;

    let eta = m.var_id(&names::eta()).expect("eta exists");
    m.objective = match sense {
        ObjectiveSense::Feasibility => Objective::Feasibility,
        ObjectiveSense::Maximize => Objective::Maximize(eta),
        ObjectiveSense::Minimize => Objective::Minimize(eta),
    };
    Ok(m)
}

fn v(m: &MilpModel, name: &str) -> usize {
    m.var_id(name)
        .unwrap_or_else(|| panic!("unknown variable {name}"))
}

/// B.1: assigning cycle configurations to ring nodes.
fn add_cycle_configuration_family(m: &mut MilpModel, ctx: &BuildContext) {
    let g = ctx.gadget;
    for &u in &ctx.ring_nodes {
        for p in 1..=g.c_max {
            m.add_var(
                names::y(u, p),
                VarKind::Real,
                0.0,
                ctx.m1,
                VarRole::new("fringe_mass_at_cycle_vertex").node(u).pos(p),
            );
        }
        for r in 1..=g.c_max {
            m.add_var(
                names::z(u, r),
                VarKind::Real,
                0.0,
                ctx.m1,
                VarRole::new("rank_mass").node(u).index(r),
            );
        }
        for &k in &ctx.xi_at[&u] {
            let xi = ctx.xi(k).clone();
            for s in 1..=xi.len() {
                for dir in ['p', 'm'] {
                    m.add_var(
                        names::xstart(u, k, s, dir),
                        VarKind::Binary,
                        0.0,
                        1.0,
                        VarRole::new("xi_start")
                            .node(u)
                            .pos(s)
                            .label(format!("{xi}:{dir}")),
                    );
                }
            }
            m.add_var(
                names::xsel(u, k),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::new("xi_chosen").node(u).label(xi.to_string()),
            );
        }
    }
    for (k, xi) in ctx.xi_global.iter().enumerate() {
        m.add_var(
            names::cc(k),
            VarKind::Integer,
            0.0,
            ctx.ring_nodes.len() as f64,
            VarRole::new("cc_count").index(k).label(xi.to_string()),
        );
    }

    let eps1 = 1.0;
    for &u in &ctx.ring_nodes {
        for r in 1..g.c_max {
            let zl = v(m, &names::z(u, r));
            let zh = v(m, &names::z(u, r + 1));
            m.add_constr(
                format!("b1_zgap_u{u}_r{r}"),
                vec![(zl, 1.0), (zh, -1.0)],
                Cmp::Le,
                -eps1,
            );
        }
        let mut one_terms = Vec::new();
        for &k in &ctx.xi_at[&u] {
            let xi_len = ctx.xi(k).len();
            let xsel = v(m, &names::xsel(u, k));
            let mut terms = vec![(xsel, 1.0)];
            for s in 1..=xi_len {
                for dir in ['p', 'm'] {
                    terms.push((v(m, &names::xstart(u, k, s, dir)), -1.0));
                }
            }
            m.add_constr(format!("b1_xsel_u{u}_xi{k}"), terms, Cmp::Eq, 0.0);
            one_terms.push((xsel, 1.0));
        }
        m.add_constr(format!("b1_one_u{u}"), one_terms, Cmp::Eq, 1.0);

        for r in 1..=g.c_max {
            for p in 1..=g.c_max {
                // Selected starts that put rank r on vertex p.
                let mut sel = Vec::new();
                for &k in &ctx.xi_at[&u] {
                    let xi = ctx.xi(k);
                    for (dir, dtag) in [(Direction::Plus, 'p'), (Direction::Minus, 'm')] {
                        for s in xi_hat(xi, r as u32, p, dir) {
                            sel.push(v(m, &names::xstart(u, k, s, dtag)));
                        }
                    }
                }
                let y = v(m, &names::y(u, p));
                let z = v(m, &names::z(u, r));
                let mut up = vec![(y, 1.0), (z, -1.0)];
                up.extend(sel.iter().map(|&x| (x, ctx.m1)));
                m.add_constr(format!("b1_yub_u{u}_r{r}_p{p}"), up, Cmp::Le, ctx.m1);
                let mut lo = vec![(y, 1.0), (z, -1.0)];
                lo.extend(sel.iter().map(|&x| (x, -ctx.m1)));
                m.add_constr(format!("b1_ylb_u{u}_r{r}_p{p}"), lo, Cmp::Ge, -ctx.m1);
            }
        }
    }

    for (k, _) in ctx.xi_global.iter().enumerate() {
        let mut terms = vec![(v(m, &names::cc(k)), 1.0)];
        for &u in &ctx.ring_nodes {
            if ctx.xi_at[&u].contains(&k) {
                terms.push((v(m, &names::xsel(u, k)), -1.0));
            }
        }
        m.add_constr(format!("b1_cc_{k}"), terms, Cmp::Eq, 0.0);
    }
}

/// B.2: associating ring nodes with ring edges.
fn add_ring_edge_family(m: &mut MilpModel, ctx: &BuildContext) {
    let g = ctx.gadget;
    for &u in &ctx.ring_nodes {
        for i in 1..=g.n_edges() {
            m.add_var(
                names::gadget_e(u, i),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::new("gadget_edge_active").node(u).gadget_edge(i),
            );
        }
        for e in ctx.spec.seed_tree.ring_edges_at(u) {
            for i in 1..=g.n_edges() {
                m.add_var(
                    names::xedge(e, u, i),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarRole::new("ring_edge_choice")
                        .edge(e)
                        .node(u)
                        .gadget_edge(i),
                );
            }
        }
        for e in ctx.spec.seed_tree.non_ring_edges_at(u) {
            for p in 1..=g.c_max {
                m.add_var(
                    names::xnode(e, u, p),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarRole::new("tree_edge_attachment").edge(e).node(u).pos(p),
                );
            }
        }
    }

    for &u in &ctx.ring_nodes {
        for e in ctx.spec.seed_tree.ring_edges_at(u) {
            let terms = (1..=g.n_edges())
                .map(|i| (v(m, &names::xedge(e, u, i)), 1.0))
                .collect();
            m.add_constr(format!("b2_edgepick_e{e}_u{u}"), terms, Cmp::Eq, 1.0);
        }
        for e in ctx.spec.seed_tree.non_ring_edges_at(u) {
            let terms = (1..=g.c_max)
                .map(|p| (v(m, &names::xnode(e, u, p)), 1.0))
                .collect();
            m.add_constr(format!("b2_nodepick_e{e}_u{u}"), terms, Cmp::Eq, 1.0);
        }
        // A cycle vertex hosts at most one ring-edge identification.
        for p in 1..=g.c_max {
            let mut terms = Vec::new();
            for e in ctx.spec.seed_tree.ring_edges_at(u) {
                for i in g.edges_at(p) {
                    terms.push((v(m, &names::xedge(e, u, i)), 1.0));
                }
            }
            if !terms.is_empty() {
                m.add_constr(format!("b2_vertexcap_u{u}_p{p}"), terms, Cmp::Le, 1.0);
            }
        }
        // A gadget edge carries at most one ring edge.
        for i in 1..=g.n_edges() {
            let terms: Vec<(usize, f64)> = ctx
                .spec
                .seed_tree
                .ring_edges_at(u)
                .into_iter()
                .map(|e| (v(m, &names::xedge(e, u, i)), 1.0))
                .collect();
            if !terms.is_empty() {
                m.add_constr(format!("b2_edgecap_u{u}_g{i}"), terms, Cmp::Le, 1.0);
            }
        }
        // Gadget edge activation pattern per chosen configuration length.
        for i in 1..=g.n_edges() {
            let ei = v(m, &names::gadget_e(u, i));
            let mut terms = vec![(ei, 1.0)];
            if i < g.c_min {
                m.add_constr(format!("b2_gadget_u{u}_g{i}"), terms, Cmp::Eq, 1.0);
                continue;
            }
            for &k in &ctx.xi_at[&u] {
                if g.edge_active(i, ctx.xi(k).len()) {
                    terms.push((v(m, &names::xsel(u, k)), -1.0));
                }
            }
            m.add_constr(format!("b2_gadget_u{u}_g{i}"), terms, Cmp::Eq, 0.0);
        }
        for e in ctx.spec.seed_tree.ring_edges_at(u) {
            for i in 1..=g.n_edges() {
                m.add_constr(
                    format!("b2_onactive_e{e}_u{u}_g{i}"),
                    vec![
                        (v(m, &names::xedge(e, u, i)), 1.0),
                        (v(m, &names::gadget_e(u, i)), -1.0),
                    ],
                    Cmp::Le,
                    0.0,
                );
            }
        }
        // Attachment positions beyond c_min must exist in the chosen cycle.
        for e in ctx.spec.seed_tree.non_ring_edges_at(u) {
            for p in (g.c_min + 1)..=g.c_max {
                let mut terms = vec![(v(m, &names::xnode(e, u, p)), 1.0)];
                for &k in &ctx.xi_at[&u] {
                    if ctx.xi(k).len() >= p {
                        terms.push((v(m, &names::xsel(u, k)), -1.0));
                    }
                }
                m.add_constr(format!("b2_nodeon_e{e}_u{u}_p{p}"), terms, Cmp::Le, 0.0);
            }
        }
    }
}

/// B.3: fringe-tree inclusion, fc accounting, rank and size accounting.
fn add_fringe_family(m: &mut MilpModel, ctx: &BuildContext) {
    let g = ctx.gadget;
    let tree = &ctx.spec.seed_tree;
    let n_f = ctx.fringes.len() as f64;

    for &u in &ctx.ring_nodes {
        for p in 1..=g.c_max {
            for &f in &ctx.fr_at[&u] {
                m.add_var(
                    names::fr_cycle(u, p, f),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarRole::new("fringe_at_cycle_vertex")
                        .node(u)
                        .pos(p)
                        .label(ctx.fringes[f].code.clone()),
                );
            }
        }
    }
    for &vtx in &ctx.non_ring_nodes {
        for &f in &ctx.fr_at[&vtx] {
            m.add_var(
                names::fr_node(vtx, f),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::new("fringe_at_node")
                    .node(vtx)
                    .label(ctx.fringes[f].code.clone()),
            );
        }
    }
    for &e in &ctx.ring_edges {
        for f in 0..ctx.fringes.len() {
            m.add_var(
                names::fce(e, f),
                VarKind::Integer,
                0.0,
                2.0,
                VarRole::new("fringe_on_ring_edge")
                    .edge(e)
                    .label(ctx.fringes[f].code.clone()),
            );
        }
    }
    for (f, info) in ctx.fringes.iter().enumerate() {
        let (lb, ub) = ctx.spec.fc_bounds(&info.code);
        m.add_var(
            names::fc(f),
            VarKind::Integer,
            f64::from(lb),
            f64::from(ub),
            VarRole::new("fc_count").index(f).label(info.code.clone()),
        );
    }
    for (j, ac) in ctx.spec.gamma_ac_lf.iter().enumerate() {
        let (lb, ub) = ctx.spec.ac_lf_bounds(ac);
        m.add_var(
            names::aclf(j),
            VarKind::Integer,
            f64::from(lb),
            f64::from(ub),
            VarRole::new("ac_lf_count").index(j).label(ac.to_string()),
        );
    }
    let (n_lb, n_ub) = ctx.spec.n_bounds();
    let (ni_lb, ni_ub) = ctx.spec.n_int_bounds();
    m.add_var(
        names::rank(),
        VarKind::Integer,
        0.0,
        tree.n_nodes() as f64,
        VarRole::new("rank"),
    );
    m.add_var(
        names::nint(),
        VarKind::Integer,
        f64::from(ni_lb),
        f64::from(ni_ub),
        VarRole::new("n_interior"),
    );
    m.add_var(
        names::ng(),
        VarKind::Integer,
        f64::from(n_lb),
        f64::from(n_ub),
        VarRole::new("n_heavy"),
    );

    // One fringe tree per active cycle vertex, with mass channeling.
    for &u in &ctx.ring_nodes {
        for p in 1..=g.c_max {
            let mut one = Vec::new();
            let mut mass = Vec::new();
            for &f in &ctx.fr_at[&u] {
                let fr = v(m, &names::fr_cycle(u, p, f));
                one.push((fr, 1.0));
                mass.push((fr, ctx.fringes[f].stats.mass_star() as f64));
            }
            for &k in &ctx.xi_at[&u] {
                if ctx.xi(k).len() >= p {
                    one.push((v(m, &names::xsel(u, k)), -1.0));
                }
            }
            m.add_constr(format!("b3_frone_u{u}_p{p}"), one, Cmp::Eq, 0.0);
            mass.push((v(m, &names::y(u, p)), -1.0));
            m.add_constr(format!("b3_frmass_u{u}_p{p}"), mass, Cmp::Eq, 0.0);
        }
    }
    // Exactly one fringe tree per non-ring node; leaves need height rho.
    for &vtx in &ctx.non_ring_nodes {
        let one = ctx.fr_at[&vtx]
            .iter()
            .map(|&f| (v(m, &names::fr_node(vtx, f)), 1.0))
            .collect();
        m.add_constr(format!("b3_frone_v{vtx}"), one, Cmp::Eq, 1.0);
        if tree.degree(vtx) <= 1 {
            let full: Vec<(usize, f64)> = ctx.fr_at[&vtx]
                .iter()
                .filter(|&&f| ctx.fringes[f].stats.height() == ctx.spec.rho)
                .map(|&f| (v(m, &names::fr_node(vtx, f)), 1.0))
                .collect();
            m.add_constr(format!("b3_leafht_v{vtx}"), full, Cmp::Eq, 1.0);
        }
    }
    // Ring-edge identification: merged vertices carry the same fringe tree.
    for &e in &ctx.ring_edges {
        let (u, up) = ctx.ring_edge_sides(e);
        for nu in 1..=g.n_edges() {
            let (i1, i2) = g.endpoints(nu);
            for nu2 in 1..=g.n_edges() {
                let (j1, j2) = g.endpoints(nu2);
                let xe_u = v(m, &names::xedge(e, u, nu));
                let xe_up = v(m, &names::xedge(e, up, nu2));
                for (tag, a_pos, b_pos) in [(1usize, i1, j2), (2, i2, j1)] {
                    let mut main = Vec::new();
                    for &f in &ctx.fr_at[&u] {
                        main.push((v(m, &names::fr_cycle(u, a_pos, f)), (f + 1) as f64));
                    }
                    for &f in &ctx.fr_at[&up] {
                        main.push((v(m, &names::fr_cycle(up, b_pos, f)), -((f + 1) as f64)));
                    }
                    let mut hi = main.clone();
                    hi.push((xe_u, n_f));
                    hi.push((xe_up, n_f));
                    m.add_constr(
                        format!("b3_sharefr{tag}ub_e{e}_g{nu}_h{nu2}"),
                        hi,
                        Cmp::Le,
                        2.0 * n_f,
                    );
                    let mut lo = main;
                    lo.push((xe_u, -n_f));
                    lo.push((xe_up, -n_f));
                    m.add_constr(
                        format!("b3_sharefr{tag}lb_e{e}_g{nu}_h{nu2}"),
                        lo,
                        Cmp::Ge,
                        -2.0 * n_f,
                    );
                }
            }
        }
        // fc on the ring edge counts the fringe trees of the merged pair.
        for nu in 1..=g.n_edges() {
            let (i1, i2) = g.endpoints(nu);
            let xe = v(m, &names::xedge(e, u, nu));
            for f in 0..ctx.fringes.len() {
                let mut main = vec![(v(m, &names::fce(e, f)), 1.0)];
                if ctx.fr_at[&u].contains(&f) {
                    main.push((v(m, &names::fr_cycle(u, i1, f)), -1.0));
                    main.push((v(m, &names::fr_cycle(u, i2, f)), -1.0));
                }
                let mut hi = main.clone();
                hi.push((xe, 2.0));
                m.add_constr(format!("b3_fceub_e{e}_g{nu}_f{f}"), hi, Cmp::Le, 2.0);
                let mut lo = main;
                lo.push((xe, -2.0));
                m.add_constr(format!("b3_fcelb_e{e}_g{nu}_f{f}"), lo, Cmp::Ge, -2.0);
            }
        }
    }
    // fc totals with the ring-edge double-count correction.
    for f in 0..ctx.fringes.len() {
        let mut terms = vec![(v(m, &names::fc(f)), 1.0)];
        for &u in &ctx.ring_nodes {
            if ctx.fr_at[&u].contains(&f) {
                for p in 1..=g.c_max {
                    terms.push((v(m, &names::fr_cycle(u, p, f)), -1.0));
                }
            }
        }
        for &vtx in &ctx.non_ring_nodes {
            if ctx.fr_at[&vtx].contains(&f) {
                terms.push((v(m, &names::fr_node(vtx, f)), -1.0));
            }
        }
        for &e in &ctx.ring_edges {
            terms.push((v(m, &names::fce(e, f)), 1.0));
        }
        m.add_constr(format!("b3_fc_{f}"), terms, Cmp::Eq, 0.0);
    }
    // Leaf adjacency-configuration accumulation.
    for (j, ac) in ctx.spec.gamma_ac_lf.iter().enumerate() {
        let mut terms = vec![(v(m, &names::aclf(j)), 1.0)];
        for (f, info) in ctx.fringes.iter().enumerate() {
            let count = info
                .stats
                .leaf_adjacency_counts()
                .get(&(ac.a, ac.b, ac.m))
                .copied()
                .unwrap_or(0);
            if count > 0 {
                terms.push((v(m, &names::fc(f)), -f64::from(count)));
            }
        }
        m.add_constr(format!("b3_aclf_{j}"), terms, Cmp::Eq, 0.0);
    }
    // rank, n_int, n accounting.
    m.add_constr(
        "b3_rank".to_string(),
        vec![(v(m, &names::rank()), 1.0)],
        Cmp::Eq,
        ctx.ring_nodes.len() as f64,
    );
    let mut terms = vec![(v(m, &names::nint()), 1.0)];
    for &u in &ctx.ring_nodes {
        for &k in &ctx.xi_at[&u] {
            terms.push((v(m, &names::xsel(u, k)), -(ctx.xi(k).len() as f64)));
        }
    }
    let constant = ctx.non_ring_nodes.len() as f64 - 2.0 * ctx.ring_edges.len() as f64;
    m.add_constr("b3_nint".to_string(), terms, Cmp::Eq, constant);
    let mut terms = vec![(v(m, &names::ng()), 1.0), (v(m, &names::nint()), -1.0)];
    for (f, info) in ctx.fringes.iter().enumerate() {
        let heavy = info.stats.heavy_non_root_count();
        if heavy > 0 {
            terms.push((v(m, &names::fc(f)), -f64::from(heavy)));
        }
    }
    m.add_constr("b3_ng".to_string(), terms, Cmp::Eq, 0.0);
}

/// B.4: degree and interior-degree indicators and totals.
fn add_degree_family(m: &mut MilpModel, ctx: &BuildContext) {
    let g = ctx.gadget;
    let tree = &ctx.spec.seed_tree;
    for &u in &ctx.ring_nodes {
        for p in 1..=g.c_max {
            for d in 1..=4 {
                m.add_var(
                    names::degc(u, p, d),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarRole::new("degree_indicator").node(u).pos(p).index(d),
                );
                m.add_var(
                    names::dintc(u, p, d),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarRole::new("interior_degree_indicator")
                        .node(u)
                        .pos(p)
                        .index(d),
                );
            }
            for e in tree.ring_edges_at(u) {
                m.add_var(
                    names::dgp(e, u, p),
                    VarKind::Integer,
                    0.0,
                    4.0,
                    VarRole::new("degree_beyond_ring_edge")
                        .edge(e)
                        .node(u)
                        .pos(p),
                );
                m.add_var(
                    names::dgm(e, u, p),
                    VarKind::Integer,
                    0.0,
                    4.0,
                    VarRole::new("degree_from_ring_edge").edge(e).node(u).pos(p),
                );
            }
        }
    }
    for &vtx in &ctx.non_ring_nodes {
        for d in 1..=4 {
            m.add_var(
                names::degn(vtx, d),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::new("degree_indicator").node(vtx).index(d),
            );
            m.add_var(
                names::dintn(vtx, d),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::new("interior_degree_indicator").node(vtx).index(d),
            );
        }
    }
    for d in 1..=4 {
        let ub = ctx.spec.n_bounds().1;
        m.add_var(
            names::dg(d),
            VarKind::Integer,
            0.0,
            f64::from(ub),
            VarRole::new("interior_vertices_of_degree").index(d),
        );
        m.add_var(
            names::dgint(d),
            VarKind::Integer,
            0.0,
            f64::from(ub),
            VarRole::new("interior_vertices_of_interior_degree").index(d),
        );
        for &e in &ctx.ring_edges {
            m.add_var(
                names::dge(e, d),
                VarKind::Integer,
                0.0,
                2.0,
                VarRole::new("degree_on_ring_edge").edge(e).index(d),
            );
            m.add_var(
                names::dginte(e, d),
                VarKind::Integer,
                0.0,
                2.0,
                VarRole::new("interior_degree_on_ring_edge")
                    .edge(e)
                    .index(d),
            );
        }
    }

    for &u in &ctx.ring_nodes {
        let nonring = tree.non_ring_edges_at(u);
        for p in 1..=g.c_max {
            for e in tree.ring_edges_at(u) {
                // dgp/dgm vanish unless a chosen ring-edge gadget edge touches p.
                for (name, tag) in [(names::dgp(e, u, p), "p"), (names::dgm(e, u, p), "m")] {
                    let mut terms = vec![(v(m, &name), 1.0)];
                    for i in g.edges_at(p) {
                        terms.push((v(m, &names::xedge(e, u, i)), -4.0));
                    }
                    m.add_constr(format!("b4_dg{tag}cap_e{e}_u{u}_p{p}"), terms, Cmp::Le, 0.0);
                }
                // dgp = 1 + attached tree edges when the gadget edge is chosen.
                for i in g.edges_at(p) {
                    let xe = v(m, &names::xedge(e, u, i));
                    let mut main = vec![(v(m, &names::dgp(e, u, p)), 1.0)];
                    for &e2 in &nonring {
                        main.push((v(m, &names::xnode(e2, u, p)), -1.0));
                    }
                    let mut hi = main.clone();
                    hi.push((xe, 4.0));
                    m.add_constr(format!("b4_dgpub_e{e}_u{u}_p{p}_g{i}"), hi, Cmp::Le, 5.0);
                    let mut lo = main;
                    lo.push((xe, -4.0));
                    m.add_constr(format!("b4_dgplb_e{e}_u{u}_p{p}_g{i}"), lo, Cmp::Ge, -3.0);
                }
            }
        }
    }
    // Transfer of the opposite side's extra degree across a ring edge.
    for &e in &ctx.ring_edges {
        let (u, up) = ctx.ring_edge_sides(e);
        for nu in 1..=g.n_edges() {
            let (i1, i2) = g.endpoints(nu);
            for nu2 in 1..=g.n_edges() {
                let (j1, j2) = g.endpoints(nu2);
                let xe_u = v(m, &names::xedge(e, u, nu));
                let xe_up = v(m, &names::xedge(e, up, nu2));
                let pairs = [
                    (1usize, names::dgm(e, u, i1), names::dgp(e, up, j2)),
                    (2, names::dgm(e, u, i2), names::dgp(e, up, j1)),
                    (3, names::dgm(e, up, j2), names::dgp(e, u, i1)),
                    (4, names::dgm(e, up, j1), names::dgp(e, u, i2)),
                ];
                for (tag, minus, plus) in pairs {
                    let main = vec![(v(m, &minus), 1.0), (v(m, &plus), -1.0)];
                    let mut hi = main.clone();
                    hi.push((xe_u, 3.0));
                    hi.push((xe_up, 3.0));
                    m.add_constr(
                        format!("b4_dgtr{tag}ub_e{e}_g{nu}_h{nu2}"),
                        hi,
                        Cmp::Le,
                        6.0,
                    );
                    let mut lo = main;
                    lo.push((xe_u, -3.0));
                    lo.push((xe_up, -3.0));
                    m.add_constr(
                        format!("b4_dgtr{tag}lb_e{e}_g{nu}_h{nu2}"),
                        lo,
                        Cmp::Ge,
                        -6.0,
                    );
                }
            }
        }
    }
    // Degree channeling at cycle vertices.
    for &u in &ctx.ring_nodes {
        let nonring = tree.non_ring_edges_at(u);
        let ring = tree.ring_edges_at(u);
        for p in 1..=g.c_max {
            let active: Vec<usize> = ctx
                .xi_at_least(u, p)
                .iter()
                .map(|&k| v(m, &names::xsel(u, k)))
                .collect();
            for (ind, tag) in [
                (names::degc as fn(usize, usize, usize) -> String, "deg"),
                (names::dintc, "dint"),
            ] {
                let mut one: Vec<(usize, f64)> =
                    (1..=4).map(|d| (v(m, &ind(u, p, d)), 1.0)).collect();
                one.extend(active.iter().map(|&x| (x, -1.0)));
                m.add_constr(format!("b4_{tag}one_u{u}_p{p}"), one, Cmp::Eq, 0.0);
            }
            // Weighted value: degree = 2 + fringe root degree + attachments + transfer.
            let mut common: Vec<(usize, f64)> = Vec::new();
            for &e2 in &nonring {
                common.push((v(m, &names::xnode(e2, u, p)), -1.0));
            }
            for &e2 in &ring {
                common.push((v(m, &names::dgm(e2, u, p)), -1.0));
            }
            let mut deg_main: Vec<(usize, f64)> = (1..=4)
                .map(|d| (v(m, &names::degc(u, p, d)), d as f64))
                .collect();
            deg_main.extend(common.iter().copied());
            for &f in &ctx.fr_at[&u] {
                let rd = ctx.fringes[f].stats.root_degree_heavy();
                if rd > 0 {
                    deg_main.push((v(m, &names::fr_cycle(u, p, f)), -f64::from(rd)));
                }
            }
            let mut lo = deg_main.clone();
            for &x in &active {
                lo.push((x, -2.0));
            }
            m.add_constr(format!("b4_deglo_u{u}_p{p}"), lo, Cmp::Ge, 0.0);
            m.add_constr(format!("b4_deghi_u{u}_p{p}"), deg_main, Cmp::Le, 2.0);

            let mut dint_main: Vec<(usize, f64)> = (1..=4)
                .map(|d| (v(m, &names::dintc(u, p, d)), d as f64))
                .collect();
            dint_main.extend(common.iter().copied());
            let mut lo = dint_main.clone();
            for &x in &active {
                lo.push((x, -2.0));
            }
            m.add_constr(format!("b4_dintlo_u{u}_p{p}"), lo, Cmp::Ge, 0.0);
            m.add_constr(format!("b4_dinthi_u{u}_p{p}"), dint_main, Cmp::Le, 2.0);
        }
    }
    // Degree channeling at non-ring nodes.
    for &vtx in &ctx.non_ring_nodes {
        let nb = tree.degree(vtx) as f64;
        let one: Vec<(usize, f64)> = (1..=4).map(|d| (v(m, &names::degn(vtx, d)), 1.0)).collect();
        m.add_constr(format!("b4_degone_v{vtx}"), one, Cmp::Eq, 1.0);
        let mut val: Vec<(usize, f64)> = (1..=4)
            .map(|d| (v(m, &names::degn(vtx, d)), d as f64))
            .collect();
        for &f in &ctx.fr_at[&vtx] {
            let rd = ctx.fringes[f].stats.root_degree_heavy();
            if rd > 0 {
                val.push((v(m, &names::fr_node(vtx, f)), -f64::from(rd)));
            }
        }
        m.add_constr(format!("b4_degval_v{vtx}"), val, Cmp::Eq, nb);
        let one: Vec<(usize, f64)> = (1..=4)
            .map(|d| (v(m, &names::dintn(vtx, d)), 1.0))
            .collect();
        m.add_constr(format!("b4_dintone_v{vtx}"), one, Cmp::Eq, 1.0);
        let val: Vec<(usize, f64)> = (1..=4)
            .map(|d| (v(m, &names::dintn(vtx, d)), d as f64))
            .collect();
        m.add_constr(format!("b4_dintval_v{vtx}"), val, Cmp::Eq, nb);
    }
    // Per-ring-edge degree duplicates.
    for &e in &ctx.ring_edges {
        let (u, _) = ctx.ring_edge_sides(e);
        for nu in 1..=g.n_edges() {
            let (i1, i2) = g.endpoints(nu);
            let xe = v(m, &names::xedge(e, u, nu));
            for d in 1..=4 {
                for (basename, ind, tag) in [
                    (
                        names::dge(e, d),
                        names::degc as fn(usize, usize, usize) -> String,
                        "dge",
                    ),
                    (names::dginte(e, d), names::dintc, "dginte"),
                ] {
                    let main = vec![
                        (v(m, &basename), 1.0),
                        (v(m, &ind(u, i1, d)), -1.0),
                        (v(m, &ind(u, i2, d)), -1.0),
                    ];
                    let mut hi = main.clone();
                    hi.push((xe, 2.0));
                    m.add_constr(format!("b4_{tag}ub_e{e}_g{nu}_d{d}"), hi, Cmp::Le, 2.0);
                    let mut lo = main;
                    lo.push((xe, -2.0));
                    m.add_constr(format!("b4_{tag}lb_e{e}_g{nu}_d{d}"), lo, Cmp::Ge, -2.0);
                }
            }
        }
    }
    // Totals.
    for d in 1..=4 {
        for (total, cyc, node, ring, tag) in [
            (
                names::dg(d),
                names::degc as fn(usize, usize, usize) -> String,
                names::degn as fn(usize, usize) -> String,
                names::dge as fn(usize, usize) -> String,
                "dg",
            ),
            (
                names::dgint(d),
                names::dintc,
                names::dintn,
                names::dginte,
                "dgint",
            ),
        ] {
            let mut terms = vec![(v(m, &total), 1.0)];
            for &u in &ctx.ring_nodes {
                for p in 1..=g.c_max {
                    terms.push((v(m, &cyc(u, p, d)), -1.0));
                }
            }
            for &vtx in &ctx.non_ring_nodes {
                terms.push((v(m, &node(vtx, d)), -1.0));
            }
            for &e in &ctx.ring_edges {
                terms.push((v(m, &ring(e, d)), 1.0));
            }
            m.add_constr(format!("b4_{tag}total_d{d}"), terms, Cmp::Eq, 0.0);
        }
    }
}

/// B.5: bond multiplicity assignment.
fn add_bond_family(m: &mut MilpModel, ctx: &BuildContext) {
    let g = ctx.gadget;
    let tree = &ctx.spec.seed_tree;
    for &u in &ctx.ring_nodes {
        for i in 1..=g.n_edges() {
            m.add_var(
                names::beta_g(u, i),
                VarKind::Integer,
                0.0,
                3.0,
                VarRole::new("gadget_bond").node(u).gadget_edge(i),
            );
            for mult in 1..=3 {
                m.add_var(
                    names::bbin_g(u, i, mult),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarRole::new("gadget_bond_indicator")
                        .node(u)
                        .gadget_edge(i)
                        .index(mult),
                );
            }
        }
    }
    for e in 0..tree.edges.len() {
        m.add_var(
            names::beta_e(e),
            VarKind::Integer,
            1.0,
            3.0,
            VarRole::new("tree_edge_bond").edge(e),
        );
        for mult in 1..=3 {
            m.add_var(
                names::bbin_e(e, mult),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::new("tree_edge_bond_indicator").edge(e).index(mult),
            );
        }
    }
    let interior_edge_cap = (ctx.ring_nodes.len() * g.c_max + tree.edges.len()) as f64;
    for mult in 1..=3 {
        m.add_var(
            names::bd(mult),
            VarKind::Integer,
            0.0,
            interior_edge_cap,
            VarRole::new("interior_bonds_of_multiplicity").index(mult),
        );
    }

    for &u in &ctx.ring_nodes {
        for i in 1..=g.n_edges() {
            let beta = v(m, &names::beta_g(u, i));
            let ei = v(m, &names::gadget_e(u, i));
            m.add_constr(
                format!("b5_bsynclo_u{u}_g{i}"),
                vec![(beta, 1.0), (ei, -1.0)],
                Cmp::Ge,
                0.0,
            );
            m.add_constr(
                format!("b5_bsynchi_u{u}_g{i}"),
                vec![(beta, 1.0), (ei, -3.0)],
                Cmp::Le,
                0.0,
            );
            let mut one: Vec<(usize, f64)> = (1..=3)
                .map(|mult| (v(m, &names::bbin_g(u, i, mult)), 1.0))
                .collect();
            one.push((ei, -1.0));
            m.add_constr(format!("b5_bone_u{u}_g{i}"), one, Cmp::Eq, 0.0);
            let mut val: Vec<(usize, f64)> = (1..=3)
                .map(|mult| (v(m, &names::bbin_g(u, i, mult)), mult as f64))
                .collect();
            val.push((beta, -1.0));
            m.add_constr(format!("b5_bval_u{u}_g{i}"), val, Cmp::Eq, 0.0);
        }
    }
    for e in 0..tree.edges.len() {
        let one: Vec<(usize, f64)> = (1..=3)
            .map(|mult| (v(m, &names::bbin_e(e, mult)), 1.0))
            .collect();
        m.add_constr(format!("b5_bone_e{e}"), one, Cmp::Eq, 1.0);
        let mut val: Vec<(usize, f64)> = (1..=3)
            .map(|mult| (v(m, &names::bbin_e(e, mult)), mult as f64))
            .collect();
        val.push((v(m, &names::beta_e(e)), -1.0));
        m.add_constr(format!("b5_bval_e{e}"), val, Cmp::Eq, 0.0);
    }
    // The chosen gadget edge carries the ring edge's multiplicity.
    for &e in &ctx.ring_edges {
        let (u, up) = ctx.ring_edge_sides(e);
        for side in [u, up] {
            for i in 1..=g.n_edges() {
                let xe = v(m, &names::xedge(e, side, i));
                let main = vec![
                    (v(m, &names::beta_g(side, i)), 1.0),
                    (v(m, &names::beta_e(e)), -1.0),
                ];
                let mut hi = main.clone();
                hi.push((xe, 3.0));
                m.add_constr(format!("b5_bretieub_e{e}_u{side}_g{i}"), hi, Cmp::Le, 3.0);
                let mut lo = main;
                lo.push((xe, -3.0));
                m.add_constr(format!("b5_bretielb_e{e}_u{side}_g{i}"), lo, Cmp::Ge, -3.0);
            }
        }
    }
    for mult in 1..=3 {
        let mut terms = vec![(v(m, &names::bd(mult)), 1.0)];
        for &u in &ctx.ring_nodes {
            for i in 1..=g.n_edges() {
                terms.push((v(m, &names::bbin_g(u, i, mult)), -1.0));
            }
        }
        for &e in &ctx.non_ring_edges {
            terms.push((v(m, &names::bbin_e(e, mult)), -1.0));
        }
        for &e in &ctx.ring_edges {
            terms.push((v(m, &names::bbin_e(e, mult)), 1.0));
        }
        m.add_constr(format!("b5_bd_m{mult}"), terms, Cmp::Eq, 0.0);
    }
}

/// B.6: element assignment, valence balance, atom counts, mass.
fn add_element_family(m: &mut MilpModel, ctx: &BuildContext) {
    let g = ctx.gadget;
    let tree = &ctx.spec.seed_tree;
    let n_lambda = ctx.lambda.len() as f64;
    let (n_lb, n_ub) = ctx.spec.n_bounds();

    for &u in &ctx.ring_nodes {
        for p in 1..=g.c_max {
            m.add_var(
                names::alpha_c(u, p),
                VarKind::Integer,
                0.0,
                n_lambda,
                VarRole::new("element_code").node(u).pos(p),
            );
            for (a, el) in ctx.lambda.iter().enumerate() {
                m.add_var(
                    names::abin_c(u, p, a),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarRole::new("element_indicator")
                        .node(u)
                        .pos(p)
                        .label(el.to_string()),
                );
            }
            for e in tree.non_ring_edges_at(u) {
                m.add_var(
                    names::bnode(e, u, p),
                    VarKind::Integer,
                    0.0,
                    3.0,
                    VarRole::new("tree_edge_bond_at_vertex")
                        .edge(e)
                        .node(u)
                        .pos(p),
                );
            }
            for e in tree.ring_edges_at(u) {
                m.add_var(
                    names::bep(e, u, p),
                    VarKind::Integer,
                    0.0,
                    6.0,
                    VarRole::new("bond_beyond_ring_edge").edge(e).node(u).pos(p),
                );
                m.add_var(
                    names::bem(e, u, p),
                    VarKind::Integer,
                    0.0,
                    6.0,
                    VarRole::new("bond_from_ring_edge").edge(e).node(u).pos(p),
                );
            }
        }
    }
    for &vtx in &ctx.non_ring_nodes {
        m.add_var(
            names::alpha_n(vtx),
            VarKind::Integer,
            0.0,
            n_lambda,
            VarRole::new("element_code").node(vtx),
        );
        for (a, el) in ctx.lambda.iter().enumerate() {
            m.add_var(
                names::abin_n(vtx, a),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::new("element_indicator")
                    .node(vtx)
                    .label(el.to_string()),
            );
        }
    }
    for &e in &ctx.ring_edges {
        for (a, el) in ctx.lambda.iter().enumerate() {
            m.add_var(
                names::nae(e, a),
                VarKind::Integer,
                0.0,
                2.0,
                VarRole::new("element_on_ring_edge")
                    .edge(e)
                    .label(el.to_string()),
            );
        }
    }
    for (a, el) in ctx.lambda.iter().enumerate() {
        let (ilb, iub) = ctx.spec.na_bounds(&ctx.spec.bounds.na_int, *el);
        m.add_var(
            names::naint(a),
            VarKind::Integer,
            f64::from(ilb),
            f64::from(iub),
            VarRole::new("na_interior").label(el.to_string()),
        );
        let (elb, eub) = ctx.spec.na_bounds(&ctx.spec.bounds.na_ex, *el);
        m.add_var(
            names::naex(a),
            VarKind::Integer,
            f64::from(elb),
            f64::from(eub),
            VarRole::new("na_exterior").label(el.to_string()),
        );
        let (tlb, tub) = ctx.spec.na_bounds(&ctx.spec.bounds.na, *el);
        m.add_var(
            names::na(a),
            VarKind::Integer,
            f64::from(tlb),
            f64::from(tub),
            VarRole::new("na_total").label(el.to_string()),
        );
    }
    let (atm_lo, atm_hi) = ctx.atm_range();
    for i in atm_lo..=atm_hi {
        m.add_var(
            names::atm(i),
            VarKind::Binary,
            0.0,
            1.0,
            VarRole::new("atom_count_indicator").index(i as usize),
        );
    }
    let max_mass = ctx
        .lambda
        .iter()
        .map(|e| e.mass_times_ten())
        .max()
        .unwrap_or(1);
    let mass_ub = f64::from(atm_hi) * f64::from(max_mass);
    m.add_var(
        names::mass(),
        VarKind::Integer,
        0.0,
        mass_ub,
        VarRole::new("total_mass"),
    );
    m.add_var(
        names::msavg(),
        VarKind::Real,
        0.0,
        f64::from(max_mass),
        VarRole::new("average_mass"),
    );
    let _ = (n_lb, n_ub);

    // Element channeling at cycle vertices.
    for &u in &ctx.ring_nodes {
        for p in 1..=g.c_max {
            let alpha = v(m, &names::alpha_c(u, p));
            let mut root = vec![(alpha, 1.0)];
            for &f in &ctx.fr_at[&u] {
                let code = ctx
                    .element_code(ctx.fringes[f].stats.root_element())
                    .expect("root element in lambda");
                root.push((v(m, &names::fr_cycle(u, p, f)), -(code as f64)));
            }
            m.add_constr(format!("b6_alpha_u{u}_p{p}"), root, Cmp::Eq, 0.0);
            let mut one: Vec<(usize, f64)> = (0..ctx.lambda.len())
                .map(|a| (v(m, &names::abin_c(u, p, a)), 1.0))
                .collect();
            for &k in &ctx.xi_at_least(u, p) {
                one.push((v(m, &names::xsel(u, k)), -1.0));
            }
            m.add_constr(format!("b6_aone_u{u}_p{p}"), one, Cmp::Eq, 0.0);
            let mut val: Vec<(usize, f64)> = (0..ctx.lambda.len())
                .map(|a| (v(m, &names::abin_c(u, p, a)), (a + 1) as f64))
                .collect();
            val.push((alpha, -1.0));
            m.add_constr(format!("b6_aval_u{u}_p{p}"), val, Cmp::Eq, 0.0);
        }
    }
    for &vtx in &ctx.non_ring_nodes {
        let alpha = v(m, &names::alpha_n(vtx));
        let mut root = vec![(alpha, 1.0)];
        for &f in &ctx.fr_at[&vtx] {
            let code = ctx
                .element_code(ctx.fringes[f].stats.root_element())
                .expect("root element in lambda");
            root.push((v(m, &names::fr_node(vtx, f)), -(code as f64)));
        }
        m.add_constr(format!("b6_alpha_v{vtx}"), root, Cmp::Eq, 0.0);
        let one: Vec<(usize, f64)> = (0..ctx.lambda.len())
            .map(|a| (v(m, &names::abin_n(vtx, a)), 1.0))
            .collect();
        m.add_constr(format!("b6_aone_v{vtx}"), one, Cmp::Eq, 1.0);
        let mut val: Vec<(usize, f64)> = (0..ctx.lambda.len())
            .map(|a| (v(m, &names::abin_n(vtx, a)), (a + 1) as f64))
            .collect();
        val.push((alpha, -1.0));
        m.add_constr(format!("b6_aval_v{vtx}"), val, Cmp::Eq, 0.0);
    }
    // Tree-edge bond at the attachment vertex.
    for &u in &ctx.ring_nodes {
        for e in tree.non_ring_edges_at(u) {
            for p in 1..=g.c_max {
                let bn = v(m, &names::bnode(e, u, p));
                let xn = v(m, &names::xnode(e, u, p));
                m.add_constr(
                    format!("b6_bnodecap_e{e}_u{u}_p{p}"),
                    vec![(bn, 1.0), (xn, -3.0)],
                    Cmp::Le,
                    0.0,
                );
                let main = vec![(v(m, &names::beta_e(e)), 1.0), (bn, -1.0)];
                let mut hi = main.clone();
                hi.push((xn, 3.0));
                m.add_constr(format!("b6_bnodeub_e{e}_u{u}_p{p}"), hi, Cmp::Le, 3.0);
                let mut lo = main;
                lo.push((xn, -3.0));
                m.add_constr(format!("b6_bnodelb_e{e}_u{u}_p{p}"), lo, Cmp::Ge, -3.0);
            }
        }
    }
    // Bond transfer around ring edges.
    for &u in &ctx.ring_nodes {
        let nonring = tree.non_ring_edges_at(u);
        for e in tree.ring_edges_at(u) {
            for p in 1..=g.c_max {
                for (name, tag) in [(names::bep(e, u, p), "p"), (names::bem(e, u, p), "m")] {
                    let mut terms = vec![(v(m, &name), 1.0)];
                    for i in g.edges_at(p) {
                        terms.push((v(m, &names::xedge(e, u, i)), -6.0));
                    }
                    m.add_constr(format!("b6_be{tag}cap_e{e}_u{u}_p{p}"), terms, Cmp::Le, 0.0);
                }
                for i in g.edges_at(p) {
                    let xe = v(m, &names::xedge(e, u, i));
                    let mut main = vec![
                        (v(m, &names::bep(e, u, p)), 1.0),
                        (v(m, &names::beta_e(e)), 1.0),
                    ];
                    for i2 in g.edges_at(p) {
                        main.push((v(m, &names::beta_g(u, i2)), -1.0));
                    }
                    for &e2 in &nonring {
                        main.push((v(m, &names::bnode(e2, u, p)), -1.0));
                    }
                    let mut hi = main.clone();
                    hi.push((xe, 6.0));
                    m.add_constr(format!("b6_bepub_e{e}_u{u}_p{p}_g{i}"), hi, Cmp::Le, 6.0);
                    let mut lo = main;
                    lo.push((xe, -6.0));
                    m.add_constr(format!("b6_beplb_e{e}_u{u}_p{p}_g{i}"), lo, Cmp::Ge, -6.0);
                }
            }
        }
    }
    for &e in &ctx.ring_edges {
        let (u, up) = ctx.ring_edge_sides(e);
        for nu in 1..=g.n_edges() {
            let (i1, i2) = g.endpoints(nu);
            for nu2 in 1..=g.n_edges() {
                let (j1, j2) = g.endpoints(nu2);
                let xe_u = v(m, &names::xedge(e, u, nu));
                let xe_up = v(m, &names::xedge(e, up, nu2));
                let pairs = [
                    (1usize, names::bem(e, u, i1), names::bep(e, up, j2)),
                    (2, names::bem(e, u, i2), names::bep(e, up, j1)),
                    (3, names::bem(e, up, j2), names::bep(e, u, i1)),
                    (4, names::bem(e, up, j1), names::bep(e, u, i2)),
                ];
                for (tag, minus, plus) in pairs {
                    let main = vec![(v(m, &minus), 1.0), (v(m, &plus), -1.0)];
                    let mut hi = main.clone();
                    hi.push((xe_u, 3.0));
                    hi.push((xe_up, 3.0));
                    m.add_constr(
                        format!("b6_betr{tag}ub_e{e}_g{nu}_h{nu2}"),
                        hi,
                        Cmp::Le,
                        6.0,
                    );
                    let mut lo = main;
                    lo.push((xe_u, -3.0));
                    lo.push((xe_up, -3.0));
                    m.add_constr(
                        format!("b6_betr{tag}lb_e{e}_g{nu}_h{nu2}"),
                        lo,
                        Cmp::Ge,
                        -6.0,
                    );
                }
            }
        }
    }
    // Valence balance.
    for &u in &ctx.ring_nodes {
        let nonring = tree.non_ring_edges_at(u);
        let ring = tree.ring_edges_at(u);
        for p in 1..=g.c_max {
            let mut terms: Vec<(usize, f64)> = (0..ctx.lambda.len())
                .map(|a| {
                    (
                        v(m, &names::abin_c(u, p, a)),
                        f64::from(ctx.lambda[a].valence()),
                    )
                })
                .collect();
            for i in g.edges_at(p) {
                terms.push((v(m, &names::beta_g(u, i)), -1.0));
            }
            for &e in &nonring {
                terms.push((v(m, &names::bnode(e, u, p)), -1.0));
            }
            for &e in &ring {
                terms.push((v(m, &names::bem(e, u, p)), -1.0));
            }
            for &f in &ctx.fr_at[&u] {
                let stats = &ctx.fringes[f].stats;
                let used = f64::from(stats.val_ex()) - f64::from(stats.ion_valence() as u32);
                if used != 0.0 {
                    terms.push((v(m, &names::fr_cycle(u, p, f)), -used));
                }
            }
            m.add_constr(format!("b6_val_u{u}_p{p}"), terms, Cmp::Eq, 0.0);
        }
    }
    for &vtx in &ctx.non_ring_nodes {
        let mut terms: Vec<(usize, f64)> = (0..ctx.lambda.len())
            .map(|a| {
                (
                    v(m, &names::abin_n(vtx, a)),
                    f64::from(ctx.lambda[a].valence()),
                )
            })
            .collect();
        for e in tree.non_ring_edges_at(vtx) {
            terms.push((v(m, &names::beta_e(e)), -1.0));
        }
        for &f in &ctx.fr_at[&vtx] {
            let stats = &ctx.fringes[f].stats;
            let used = f64::from(stats.val_ex()) - f64::from(stats.ion_valence() as u32);
            if used != 0.0 {
                terms.push((v(m, &names::fr_node(vtx, f)), -used));
            }
        }
        m.add_constr(format!("b6_val_v{vtx}"), terms, Cmp::Eq, 0.0);
    }
    // Element counts.
    for (a, el) in ctx.lambda.iter().enumerate() {
        for &e in &ctx.ring_edges {
            let mut terms = vec![(v(m, &names::nae(e, a)), 1.0)];
            for (f, info) in ctx.fringes.iter().enumerate() {
                if info.stats.root_element() == *el {
                    terms.push((v(m, &names::fce(e, f)), -1.0));
                }
            }
            m.add_constr(format!("b6_nae_e{e}_a{a}"), terms, Cmp::Eq, 0.0);
        }
        let mut terms = vec![(v(m, &names::naint(a)), 1.0)];
        for &u in &ctx.ring_nodes {
            for p in 1..=g.c_max {
                terms.push((v(m, &names::abin_c(u, p, a)), -1.0));
            }
        }
        for &vtx in &ctx.non_ring_nodes {
            terms.push((v(m, &names::abin_n(vtx, a)), -1.0));
        }
        for &e in &ctx.ring_edges {
            terms.push((v(m, &names::nae(e, a)), 1.0));
        }
        m.add_constr(format!("b6_naint_a{a}"), terms, Cmp::Eq, 0.0);

        let mut terms = vec![(v(m, &names::naex(a)), 1.0)];
        for (f, info) in ctx.fringes.iter().enumerate() {
            let count = info.stats.non_root_count(*el);
            if count > 0 {
                terms.push((v(m, &names::fc(f)), -f64::from(count)));
            }
        }
        m.add_constr(format!("b6_naex_a{a}"), terms, Cmp::Eq, 0.0);
        m.add_constr(
            format!("b6_na_a{a}"),
            vec![
                (v(m, &names::na(a)), 1.0),
                (v(m, &names::naint(a)), -1.0),
                (v(m, &names::naex(a)), -1.0),
            ],
            Cmp::Eq,
            0.0,
        );
    }
    // Mass and average mass.
    let mut terms = vec![(v(m, &names::mass()), 1.0)];
    for (a, el) in ctx.lambda.iter().enumerate() {
        terms.push((v(m, &names::na(a)), -f64::from(el.mass_times_ten())));
    }
    m.add_constr("b6_mass".to_string(), terms, Cmp::Eq, 0.0);
    let one: Vec<(usize, f64)> = (atm_lo..=atm_hi)
        .map(|i| (v(m, &names::atm(i)), 1.0))
        .collect();
    m.add_constr("b6_atmone".to_string(), one, Cmp::Eq, 1.0);
    let mut val: Vec<(usize, f64)> = (atm_lo..=atm_hi)
        .map(|i| (v(m, &names::atm(i)), f64::from(i)))
        .collect();
    val.push((v(m, &names::ng()), -1.0));
    val.push((v(m, &names::naex(ctx.h_index)), -1.0));
    m.add_constr("b6_atmval".to_string(), val, Cmp::Eq, 0.0);
    for i in atm_lo..=atm_hi {
        let main = vec![
            (v(m, &names::msavg()), 1.0),
            (v(m, &names::mass()), -1.0 / f64::from(i)),
        ];
        let atm = v(m, &names::atm(i));
        let mut hi = main.clone();
        hi.push((atm, ctx.m_ms));
        m.add_constr(format!("b6_msavgub_i{i}"), hi, Cmp::Le, ctx.m_ms);
        let mut lo = main;
        lo.push((atm, -ctx.m_ms));
        m.add_constr(format!("b6_msavglb_i{i}"), lo, Cmp::Ge, -ctx.m_ms);
    }
}

/// B.7: adjacency-configuration channeling and totals.
fn add_adjacency_family(m: &mut MilpModel, ctx: &BuildContext) {
    let g = ctx.gadget;
    let tree = &ctx.spec.seed_tree;
    let gamma = &ctx.spec.gamma_ac_int;
    let n_lambda = ctx.lambda.len() as f64;

    for &u in &ctx.ring_nodes {
        for i in 1..=g.n_edges() {
            for (c, ac) in gamma.iter().enumerate() {
                m.add_var(
                    names::acg(u, i, c),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarRole::new("ac_indicator")
                        .node(u)
                        .gadget_edge(i)
                        .label(ac.to_string()),
                );
            }
        }
    }
    for e in 0..tree.edges.len() {
        for (c, ac) in gamma.iter().enumerate() {
            m.add_var(
                names::ace(e, c),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::new("ac_indicator").edge(e).label(ac.to_string()),
            );
        }
    }
    for (c, ac) in gamma.iter().enumerate() {
        let (lb, ub) = ctx.spec.ac_int_bounds(ac);
        m.add_var(
            names::acint(c),
            VarKind::Integer,
            f64::from(lb),
            f64::from(ub),
            VarRole::new("ac_int_count").index(c).label(ac.to_string()),
        );
    }

    for &u in &ctx.ring_nodes {
        for i in 1..=g.n_edges() {
            let (p1, p2) = g.endpoints(i);
            let ei = v(m, &names::gadget_e(u, i));
            let mut one: Vec<(usize, f64)> = (0..gamma.len())
                .map(|c| (v(m, &names::acg(u, i, c)), 1.0))
                .collect();
            one.push((ei, -1.0));
            m.add_constr(format!("b7_one_u{u}_g{i}"), one, Cmp::Eq, 0.0);

            let beta = v(m, &names::beta_g(u, i));
            let mut mlo: Vec<(usize, f64)> = (0..gamma.len())
                .map(|c| (v(m, &names::acg(u, i, c)), f64::from(gamma[c].m)))
                .collect();
            mlo.push((beta, -1.0));
            let mut mhi = mlo.clone();
            mlo.push((ei, -3.0));
            m.add_constr(format!("b7_mlo_u{u}_g{i}"), mlo, Cmp::Ge, -3.0);
            m.add_constr(
                format!("b7_mhi_u{u}_g{i}"),
                std::mem::take(&mut mhi),
                Cmp::Le,
                0.0,
            );

            for (end, pos, tagc) in [(0usize, p1, 'a'), (1, p2, 'b')] {
                let alpha = v(m, &names::alpha_c(u, pos));
                let mut lo: Vec<(usize, f64)> = (0..gamma.len())
                    .map(|c| {
                        let el = if end == 0 { gamma[c].a } else { gamma[c].b };
                        let code = ctx.element_code(el).expect("element in lambda") as f64;
                        (v(m, &names::acg(u, i, c)), code)
                    })
                    .collect();
                lo.push((alpha, -1.0));
                let mut hi = lo.clone();
                lo.push((ei, -n_lambda));
                m.add_constr(format!("b7_{tagc}lo_u{u}_g{i}"), lo, Cmp::Ge, -n_lambda);
                m.add_constr(
                    format!("b7_{tagc}hi_u{u}_g{i}"),
                    std::mem::take(&mut hi),
                    Cmp::Le,
                    0.0,
                );
            }
        }
    }
    // Tree edges always carry exactly one configuration.
    for e in 0..tree.edges.len() {
        let one: Vec<(usize, f64)> = (0..gamma.len())
            .map(|c| (v(m, &names::ace(e, c)), 1.0))
            .collect();
        m.add_constr(format!("b7_one_e{e}"), one, Cmp::Eq, 1.0);
        let mut val: Vec<(usize, f64)> = (0..gamma.len())
            .map(|c| (v(m, &names::ace(e, c)), f64::from(gamma[c].m)))
            .collect();
        val.push((v(m, &names::beta_e(e)), -1.0));
        m.add_constr(format!("b7_mval_e{e}"), val, Cmp::Eq, 0.0);
    }
    // Endpoint element linking for non-ring edges.
    for &e in &ctx.non_ring_edges {
        let (u, w) = ctx.edge_nodes(e);
        for (endpoint, end) in [(u, 0usize), (w, 1)] {
            let coeff = |c: usize| {
                let el = if end == 0 { gamma[c].a } else { gamma[c].b };
                ctx.element_code(el).expect("element in lambda") as f64
            };
            if !tree.nodes[endpoint].ring {
                let mut terms: Vec<(usize, f64)> = (0..gamma.len())
                    .map(|c| (v(m, &names::ace(e, c)), coeff(c)))
                    .collect();
                terms.push((v(m, &names::alpha_n(endpoint)), -1.0));
                m.add_constr(format!("b7_end{end}_e{e}"), terms, Cmp::Eq, 0.0);
            } else {
                for p in 1..=g.c_max {
                    let xn = v(m, &names::xnode(e, endpoint, p));
                    let mut main: Vec<(usize, f64)> = (0..gamma.len())
                        .map(|c| (v(m, &names::ace(e, c)), coeff(c)))
                        .collect();
                    main.push((v(m, &names::alpha_c(endpoint, p)), -1.0));
                    let mut hi = main.clone();
                    hi.push((xn, n_lambda));
                    m.add_constr(format!("b7_end{end}ub_e{e}_p{p}"), hi, Cmp::Le, n_lambda);
                    let mut lo = main;
                    lo.push((xn, -n_lambda));
                    m.add_constr(format!("b7_end{end}lb_e{e}_p{p}"), lo, Cmp::Ge, -n_lambda);
                }
            }
        }
    }
    // Endpoint element linking for ring edges (recorded from the smaller side).
    for &e in &ctx.ring_edges {
        let (u, _) = ctx.ring_edge_sides(e);
        for i in 1..=g.n_edges() {
            let (p1, p2) = g.endpoints(i);
            let xe = v(m, &names::xedge(e, u, i));
            for (end, pos) in [(0usize, p1), (1, p2)] {
                let mut main: Vec<(usize, f64)> = (0..gamma.len())
                    .map(|c| {
                        let el = if end == 0 { gamma[c].a } else { gamma[c].b };
                        (
                            v(m, &names::ace(e, c)),
                            ctx.element_code(el).expect("element") as f64,
                        )
                    })
                    .collect();
                main.push((v(m, &names::alpha_c(u, pos)), -1.0));
                let mut hi = main.clone();
                hi.push((xe, n_lambda));
                m.add_constr(format!("b7_rend{end}ub_e{e}_g{i}"), hi, Cmp::Le, n_lambda);
                let mut lo = main;
                lo.push((xe, -n_lambda));
                m.add_constr(format!("b7_rend{end}lb_e{e}_g{i}"), lo, Cmp::Ge, -n_lambda);
            }
        }
    }
    // Totals (count unordered configurations).
    for (c, ac) in gamma.iter().enumerate() {
        let rev = ac.reversed();
        let crev = ctx.ac_code(&rev).expect("closure") - 1;
        let mut sources: Vec<usize> = vec![c];
        if crev != c {
            sources.push(crev);
        }
        let mut terms = vec![(v(m, &names::acint(c)), 1.0)];
        for &u in &ctx.ring_nodes {
            for i in 1..=g.n_edges() {
                for &s in &sources {
                    terms.push((v(m, &names::acg(u, i, s)), -1.0));
                }
            }
        }
        for &e in &ctx.non_ring_edges {
            for &s in &sources {
                terms.push((v(m, &names::ace(e, s)), -1.0));
            }
        }
        for &e in &ctx.ring_edges {
            for &s in &sources {
                terms.push((v(m, &names::ace(e, s)), 1.0));
            }
        }
        m.add_constr(format!("b7_total_c{c}"), terms, Cmp::Eq, 0.0);
    }
}

/// B.8: edge-configuration channeling (consistent with B.7 and B.4) and
/// totals.
fn add_edge_config_family(m: &mut MilpModel, ctx: &BuildContext) {
    let g = ctx.gadget;
    let tree = &ctx.spec.seed_tree;
    let taus = &ctx.spec.gamma_ec_int;

    for &u in &ctx.ring_nodes {
        for i in 1..=g.n_edges() {
            for (t, ec) in taus.iter().enumerate() {
                m.add_var(
                    names::ecg(u, i, t),
                    VarKind::Binary,
                    0.0,
                    1.0,
                    VarRole::new("ec_indicator")
                        .node(u)
                        .gadget_edge(i)
                        .label(ec.to_string()),
                );
            }
        }
    }
    for e in 0..tree.edges.len() {
        for (t, ec) in taus.iter().enumerate() {
            m.add_var(
                names::ece(e, t),
                VarKind::Binary,
                0.0,
                1.0,
                VarRole::new("ec_indicator").edge(e).label(ec.to_string()),
            );
        }
    }
    for (t, ec) in taus.iter().enumerate() {
        let (lb, ub) = ctx.spec.ec_int_bounds(ec);
        m.add_var(
            names::ecint(t),
            VarKind::Integer,
            f64::from(lb),
            f64::from(ub),
            VarRole::new("ec_int_count").index(t).label(ec.to_string()),
        );
    }

    let ac_of = |t: usize| {
        let tau = &taus[t];
        let ordered = AdjacencyConfig {
            a: tau.a,
            b: tau.b,
            m: tau.m,
        };
        ctx.ac_code(&ordered).expect("validated projection") as f64
    };

    for &u in &ctx.ring_nodes {
        for i in 1..=g.n_edges() {
            let (p1, p2) = g.endpoints(i);
            let ei = v(m, &names::gadget_e(u, i));
            let mut one: Vec<(usize, f64)> = (0..taus.len())
                .map(|t| (v(m, &names::ecg(u, i, t)), 1.0))
                .collect();
            one.push((ei, -1.0));
            m.add_constr(format!("b8_one_u{u}_g{i}"), one, Cmp::Eq, 0.0);

            let mut link: Vec<(usize, f64)> = (0..taus.len())
                .map(|t| (v(m, &names::ecg(u, i, t)), ac_of(t)))
                .collect();
            for (c, _) in ctx.spec.gamma_ac_int.iter().enumerate() {
                link.push((v(m, &names::acg(u, i, c)), -((c + 1) as f64)));
            }
            m.add_constr(format!("b8_ac_u{u}_g{i}"), link, Cmp::Eq, 0.0);

            for (end, pos, tagc) in [(0usize, p1, 'a'), (1, p2, 'b')] {
                let mut lo: Vec<(usize, f64)> = (0..taus.len())
                    .map(|t| {
                        let d = if end == 0 { taus[t].da } else { taus[t].db };
                        (v(m, &names::ecg(u, i, t)), f64::from(d))
                    })
                    .collect();
                for d in 1..=4 {
                    lo.push((v(m, &names::degc(u, pos, d)), -(d as f64)));
                }
                let mut hi = lo.clone();
                lo.push((ei, -4.0));
                m.add_constr(format!("b8_{tagc}lo_u{u}_g{i}"), lo, Cmp::Ge, -4.0);
                m.add_constr(
                    format!("b8_{tagc}hi_u{u}_g{i}"),
                    std::mem::take(&mut hi),
                    Cmp::Le,
                    0.0,
                );
            }
        }
    }
    for e in 0..tree.edges.len() {
        let one: Vec<(usize, f64)> = (0..taus.len())
            .map(|t| (v(m, &names::ece(e, t)), 1.0))
            .collect();
        m.add_constr(format!("b8_one_e{e}"), one, Cmp::Eq, 1.0);
        let mut link: Vec<(usize, f64)> = (0..taus.len())
            .map(|t| (v(m, &names::ece(e, t)), ac_of(t)))
            .collect();
        for (c, _) in ctx.spec.gamma_ac_int.iter().enumerate() {
            link.push((v(m, &names::ace(e, c)), -((c + 1) as f64)));
        }
        m.add_constr(format!("b8_ac_e{e}"), link, Cmp::Eq, 0.0);
    }
    for &e in &ctx.non_ring_edges {
        let (u, w) = ctx.edge_nodes(e);
        for (endpoint, end) in [(u, 0usize), (w, 1)] {
            let dcoeff = |t: usize| f64::from(if end == 0 { taus[t].da } else { taus[t].db });
            if !tree.nodes[endpoint].ring {
                let mut terms: Vec<(usize, f64)> = (0..taus.len())
                    .map(|t| (v(m, &names::ece(e, t)), dcoeff(t)))
                    .collect();
                for d in 1..=4 {
                    terms.push((v(m, &names::degn(endpoint, d)), -(d as f64)));
                }
                m.add_constr(format!("b8_end{end}_e{e}"), terms, Cmp::Eq, 0.0);
            } else {
                for p in 1..=g.c_max {
                    let xn = v(m, &names::xnode(e, endpoint, p));
                    let mut main: Vec<(usize, f64)> = (0..taus.len())
                        .map(|t| (v(m, &names::ece(e, t)), dcoeff(t)))
                        .collect();
                    for d in 1..=4 {
                        main.push((v(m, &names::degc(endpoint, p, d)), -(d as f64)));
                    }
                    let mut hi = main.clone();
                    hi.push((xn, 4.0));
                    m.add_constr(format!("b8_end{end}ub_e{e}_p{p}"), hi, Cmp::Le, 4.0);
                    let mut lo = main;
                    lo.push((xn, -4.0));
                    m.add_constr(format!("b8_end{end}lb_e{e}_p{p}"), lo, Cmp::Ge, -4.0);
                }
            }
        }
    }
    for &e in &ctx.ring_edges {
        let (u, _) = ctx.ring_edge_sides(e);
        for i in 1..=g.n_edges() {
            let (p1, p2) = g.endpoints(i);
            let xe = v(m, &names::xedge(e, u, i));
            for (end, pos) in [(0usize, p1), (1, p2)] {
                let mut main: Vec<(usize, f64)> = (0..taus.len())
                    .map(|t| {
                        let d = if end == 0 { taus[t].da } else { taus[t].db };
                        (v(m, &names::ece(e, t)), f64::from(d))
                    })
                    .collect();
                for d in 1..=4 {
                    main.push((v(m, &names::degc(u, pos, d)), -(d as f64)));
                }
                let mut hi = main.clone();
                hi.push((xe, 4.0));
                m.add_constr(format!("b8_rend{end}ub_e{e}_g{i}"), hi, Cmp::Le, 4.0);
                let mut lo = main;
                lo.push((xe, -4.0));
                m.add_constr(format!("b8_rend{end}lb_e{e}_g{i}"), lo, Cmp::Ge, -4.0);
            }
        }
    }
    for (t, ec) in taus.iter().enumerate() {
        let rev = ec.reversed();
        let trev = taus.iter().position(|x| *x == rev).expect("closure");
        let mut sources = vec![t];
        if trev != t {
            sources.push(trev);
        }
        let mut terms = vec![(v(m, &names::ecint(t)), 1.0)];
        for &u in &ctx.ring_nodes {
            for i in 1..=g.n_edges() {
                for &s in &sources {
                    terms.push((v(m, &names::ecg(u, i, s)), -1.0));
                }
            }
        }
        for &e in &ctx.non_ring_edges {
            for &s in &sources {
                terms.push((v(m, &names::ece(e, s)), -1.0));
            }
        }
        for &e in &ctx.ring_edges {
            for &s in &sources {
                terms.push((v(m, &names::ece(e, s)), 1.0));
            }
        }
        m.add_constr(format!("b8_total_t{t}"), terms, Cmp::Eq, 0.0);
    }
}

/// Maps a descriptor key to a linear expression over model variable names.
///
/// Degree counts get the fringe-tree correction: the model's `dg` variables
/// count interior vertices only, so the exterior vertices of each assigned
/// fringe tree contribute through its `fc` count.
pub(crate) fn descriptor_expression(
    ctx: &BuildContext,
    key: &DescriptorKey,
) -> Result<Vec<(String, f64)>> {
    let missing = |what: String| {
        Error::MilpBuild(format!(
            "hyperplane column {key} is not expressible under the specification ({what})"
        ))
    };
    Ok(match key {
        DescriptorKey::NHeavy => vec![(names::ng(), 1.0)],
        DescriptorKey::Rank => vec![(names::rank(), 1.0)],
        DescriptorKey::NInterior => vec![(names::nint(), 1.0)],
        DescriptorKey::AvgMass => vec![(names::msavg(), 1.0)],
        DescriptorKey::Dg(d) => {
            let mut terms = vec![(names::dg(*d as usize), 1.0)];
            for (f, info) in ctx.fringes.iter().enumerate() {
                let cnt = info.exterior_deg[*d as usize - 1];
                if cnt > 0 {
                    terms.push((names::fc(f), f64::from(cnt)));
                }
            }
            terms
        }
        DescriptorKey::DgInt(d) => vec![(names::dgint(*d as usize), 1.0)],
        DescriptorKey::BdInt(mult) => vec![(names::bd(*mult as usize), 1.0)],
        DescriptorKey::NaInt(el) => {
            let a = ctx
                .lambda
                .iter()
                .position(|x| x == el)
                .ok_or_else(|| missing(format!("element {el} not in lambda")))?;
            vec![(names::naint(a), 1.0)]
        }
        DescriptorKey::NaEx(el) => {
            let a = ctx
                .lambda
                .iter()
                .position(|x| x == el)
                .ok_or_else(|| missing(format!("element {el} not in lambda")))?;
            vec![(names::naex(a), 1.0)]
        }
        DescriptorKey::Ec(ec) => {
            let t = ctx
                .spec
                .gamma_ec_int
                .iter()
                .position(|x| x == ec)
                .ok_or_else(|| missing(format!("edge configuration {ec} not available")))?;
            vec![(names::ecint(t), 1.0)]
        }
        DescriptorKey::Fc(code) => {
            let f = ctx
                .fringe_index(code)
                .ok_or_else(|| missing(format!("fringe tree {code} not available")))?;
            vec![(names::fc(f), 1.0)]
        }
        DescriptorKey::AcLf(ac) => {
            let j = ctx
                .spec
                .gamma_ac_lf
                .iter()
                .position(|x| x == ac)
                .ok_or_else(|| missing(format!("leaf adjacency {ac} not available")))?;
            vec![(names::aclf(j), 1.0)]
        }
        DescriptorKey::Cc(xi) => {
            let k = ctx
                .xi_global
                .binary_search(xi)
                .map_err(|_| missing(format!("cycle configuration {xi} not available")))?;
            vec![(names::cc(k), 1.0)]
        }
    })
}

/// The property constraint: eta = sum(w * feature expression) + b with eta
/// bounded by the target range.
fn add_hyperplane(m: &mut MilpModel, ctx: &BuildContext, h: &Hyperplane) -> Result<()> {
    let eta = m.add_var(
        names::eta(),
        VarKind::Real,
        ctx.spec.y_lb,
        ctx.spec.y_ub,
        VarRole::new("predicted_property"),
    );
    let mut terms: Vec<(usize, f64)> = vec![(eta, -1.0)];
    for (name, &w) in h.column_names.iter().zip(&h.weights) {
        if w == 0.0 {
            continue;
        }
        let key = DescriptorKey::parse(name)?;
        for (var, coef) in descriptor_expression(ctx, &key)? {
            terms.push((v(m, &var), w * coef));
        }
    }
    m.add_constr("hyperplane".to_string(), terms, Cmp::Eq, -h.bias);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_hat_paper_example() {
        let xi = CycleConfig::parse("1,1,2,3").unwrap();
        assert_eq!(xi_hat(&xi, 1, 1, Direction::Plus), vec![1, 4]);
        assert_eq!(xi_hat(&xi, 9, 1, Direction::Plus), Vec::<usize>::new());
        // Out-of-cycle vertex has no start points.
        assert_eq!(xi_hat(&xi, 1, 5, Direction::Plus), Vec::<usize>::new());
    }

    #[test]
    fn xi_hat_minus_mirrors_plus() {
        for spec in ["1,1,2,3", "1,2,1,3,2", "1,1,1,2,1,2"] {
            let xi = CycleConfig::parse(spec).unwrap();
            let l = xi.len();
            for r in 1..=3u32 {
                for mu in 1..=l {
                    let plus = xi_hat(&xi, r, mu, Direction::Plus);
                    let minus = xi_hat(&xi, r, mu, Direction::Minus);
                    // mu0 in the minus direction corresponds to the reflected
                    // offset: mu0' with (mu0' - mu) = -(mu0 - mu) mod l.
                    let mirrored: Vec<usize> = plus
                        .iter()
                        .map(|&mu0| {
                            let diff = (mu as i64 - mu0 as i64).rem_euclid(l as i64);
                            let m0 = (mu as i64 + diff - 1).rem_euclid(l as i64) + 1;
                            m0 as usize
                        })
                        .collect();
                    let mut a = minus.clone();
                    let mut b = mirrored.clone();
                    a.sort_unstable();
                    b.sort_unstable();
                    assert_eq!(a, b, "xi {spec} r {r} mu {mu}");
                }
            }
        }
    }

    #[test]
    fn gadget_geometry() {
        let g = Gadget { c_min: 4, c_max: 6 };
        assert_eq!(g.n_edges(), 8);
        assert_eq!(g.endpoints(1), (1, 2));
        assert_eq!(g.endpoints(6), (1, 6));
        assert_eq!(g.endpoints(7), (1, 4));
        assert_eq!(g.endpoints(8), (1, 5));
        assert_eq!(g.cycle_edges(4), vec![1, 2, 3, 7]);
        assert_eq!(g.cycle_edges(5), vec![1, 2, 3, 4, 8]);
        assert_eq!(g.cycle_edges(6), vec![1, 2, 3, 4, 5, 6]);
        // Each selected edge set forms one closed cycle through u1..ul.
        for l in 4..=6 {
            let edges = g.cycle_edges(l);
            assert_eq!(edges.len(), l);
            let mut deg = vec![0usize; g.c_max + 1];
            for &i in &edges {
                let (a, b) = g.endpoints(i);
                deg[a] += 1;
                deg[b] += 1;
            }
            for p in 1..=g.c_max {
                assert_eq!(deg[p], if p <= l { 2 } else { 0 }, "l={l} p={p}");
            }
        }
    }
}
