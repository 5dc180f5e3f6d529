//! The MILP container: named typed variables, linear constraints, LP-format
//! emission, variable-map export, solution reading, and assignment checking.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Binary,
    Integer,
    Real,
}

/// Semantic role of a variable, exported in the variable map so solutions can
/// be interpreted without reading the generator source.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct VarRole {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pos: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gadget_edge: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl VarRole {
    pub fn new(kind: &str) -> VarRole {
        VarRole {
            kind: kind.to_string(),
            ..VarRole::default()
        }
    }
    pub fn node(mut self, u: usize) -> VarRole {
        self.node = Some(u);
        self
    }
    pub fn edge(mut self, e: usize) -> VarRole {
        self.edge = Some(e);
        self
    }
    pub fn pos(mut self, p: usize) -> VarRole {
        self.pos = Some(p);
        self
    }
    pub fn gadget_edge(mut self, i: usize) -> VarRole {
        self.gadget_edge = Some(i);
        self
    }
    pub fn index(mut self, i: usize) -> VarRole {
        self.index = Some(i);
        self
    }
    pub fn label(mut self, s: impl Into<String>) -> VarRole {
        self.label = Some(s.into());
        self
    }
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    pub role: VarRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    /// (variable index, coefficient) pairs; combined and zero-free.
    pub terms: Vec<(usize, f64)>,
    pub op: Cmp,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Feasibility,
    Maximize(usize),
    Minimize(usize),
}

/// A built MILP: variables, constraints, objective, and a name index.
#[derive(Debug)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Objective,
    index: HashMap<String, usize>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 255
        && name.as_bytes()[0].is_ascii_alphabetic()
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> MilpModel {
        MilpModel {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective::Feasibility,
            index: HashMap::new(),
        }
    }

    pub fn n_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn add_var(
        &mut self,
        name: String,
        kind: VarKind,
        lb: f64,
        ub: f64,
        role: VarRole,
    ) -> usize {
        assert!(valid_name(&name), "bad variable name {name:?}");
        assert!(
            !self.index.contains_key(&name),
            "duplicate variable name {name:?}"
        );
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            kind,
            lb,
            ub,
            role,
        });
        id
    }

    /// Adds a constraint; terms with equal variables are combined and zero
    /// coefficients dropped.
    pub fn add_constr(&mut self, name: String, terms: Vec<(usize, f64)>, op: Cmp, rhs: f64) {
        assert!(valid_name(&name), "bad constraint name {name:?}");
        let mut combined: BTreeMap<usize, f64> = BTreeMap::new();
        for (v, c) in terms {
            assert!(
                v < self.variables.len(),
                "constraint references unknown variable"
            );
            *combined.entry(v).or_insert(0.0) += c;
        }
        let terms: Vec<(usize, f64)> = combined.into_iter().filter(|&(_, c)| c != 0.0).collect();
        self.constraints.push(Constraint {
            name,
            terms,
            op,
            rhs,
        });
    }

    pub fn var_id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn var(&self, id: usize) -> &Variable {
        &self.variables[id]
    }

    /// Value of a named variable in an assignment.
    pub fn value_of(&self, values: &HashMap<String, f64>, name: &str) -> Result<f64> {
        values
            .get(name)
            .copied()
            .ok_or_else(|| Error::Solution(format!("solution misses variable {name:?}")))
    }

    /// Checks a full assignment against bounds, integrality, and every
    /// constraint. Returns the list of violations (empty = feasible).
    pub fn check_assignment(&self, values: &HashMap<String, f64>, int_tol: f64) -> Vec<String> {
        let mut bad = Vec::new();
        let mut x = vec![f64::NAN; self.variables.len()];
        for v in &self.variables {
            match values.get(&v.name) {
                None => bad.push(format!("missing variable {}", v.name)),
                Some(&val) => {
                    x[self.index[&v.name]] = val;
                    if val < v.lb - 1e-6 || val > v.ub + 1e-6 {
                        bad.push(format!(
                            "{} = {val} outside bounds [{}, {}]",
                            v.name, v.lb, v.ub
                        ));
                    }
                    if matches!(v.kind, VarKind::Binary | VarKind::Integer)
                        && (val - val.round()).abs() > int_tol
                    {
                        bad.push(format!("{} = {val} is not integral", v.name));
                    }
                }
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(v, coef)| coef * x[v]).sum();
            let ok = match c.op {
                Cmp::Le => lhs <= c.rhs + 1e-6,
                Cmp::Ge => lhs >= c.rhs - 1e-6,
                Cmp::Eq => (lhs - c.rhs).abs() <= 1e-6,
            };
            if !ok {
                bad.push(format!(
                    "constraint {} violated: lhs {lhs}, rhs {} ({:?})",
                    c.name, c.rhs, c.op
                ));
            }
        }
        bad
    }
}

fn fmt_coeff(out: &mut String, first: bool, coef: f64, name: &str) {
    if coef >= 0.0 {
        if !first {
            out.push_str(" + ");
        }
    } else {
        out.push_str(if first { "- " } else { " - " });
    }
    let mag = coef.abs();
    if mag == 1.0 {
        let _ = write!(out, "{name}");
    } else {
        let _ = write!(out, "{mag} {name}");
    }
}

/// Writes the model in CPLEX LP text format plus a JSON variable map.
pub fn write_lp(m: &MilpModel, lp_path: &Path, varmap_path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", m.name);
    let _ = writeln!(
        out,
        "\\ variables: {}  constraints: {}",
        m.n_variables(),
        m.n_constraints()
    );
    match m.objective {
        Objective::Feasibility => {
            out.push_str("Minimize\n obj: 0 ");
            out.push_str(&m.variables[0].name);
            out.push('\n');
        }
        Objective::Maximize(v) => {
            out.push_str("Maximize\n obj: ");
            out.push_str(&m.variables[v].name);
            out.push('\n');
        }
        Objective::Minimize(v) => {
            out.push_str("Minimize\n obj: ");
            out.push_str(&m.variables[v].name);
            out.push('\n');
        }
    }
    out.push_str("Subject To\n");
    for c in &m.constraints {
        let _ = write!(out, " {}: ", c.name);
        if c.terms.is_empty() {
            // Degenerate constant row; keep the file parseable.
            let _ = write!(out, "0 {}", m.variables[0].name);
        } else {
            for (i, &(v, coef)) in c.terms.iter().enumerate() {
                fmt_coeff(&mut out, i == 0, coef, &m.variables[v].name);
            }
        }
        let op = match c.op {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
            Cmp::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &m.variables {
        match v.kind {
            VarKind::Binary => {}
            _ => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lb, v.name, v.ub);
            }
        }
    }
    let generals: Vec<&str> = m
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Integer)
        .map(|v| v.name.as_str())
        .collect();
    if !generals.is_empty() {
        out.push_str("Generals\n");
        for chunk in generals.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    let binaries: Vec<&str> = m
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    fs::write(lp_path, out)?;
    write_varmap(m, varmap_path)
}

#[derive(Serialize, Deserialize)]
struct VarMapEntry {
    name: String,
    kind: VarKind,
    lb: f64,
    ub: f64,
    role: VarRole,
}

/// Writes the variable map: each variable name with its semantic role.
pub fn write_varmap(m: &MilpModel, path: &Path) -> Result<()> {
    let entries: Vec<VarMapEntry> = m
        .variables
        .iter()
        .map(|v| VarMapEntry {
            name: v.name.clone(),
            kind: v.kind,
            lb: v.lb,
            ub: v.ub,
            role: v.role.clone(),
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&entries)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Reads a solution in plain `name value` lines. Blank lines and `#` comments
/// are skipped; names the model does not know are tolerated and ignored by
/// consumers.
pub fn read_solution(text: &str) -> Result<HashMap<String, f64>> {
    let mut values = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| Error::Solution(format!("line {}: missing name", lineno + 1)))?;
        let value: f64 = parts
            .next()
            .ok_or_else(|| Error::Solution(format!("line {}: missing value", lineno + 1)))?
            .parse()
            .map_err(|_| Error::Solution(format!("line {}: bad value", lineno + 1)))?;
        values.insert(name.to_string(), value);
    }
    Ok(values)
}

/// Serializes a solution map in the same plain text format, sorted by name.
pub fn format_solution(values: &HashMap<String, f64>) -> String {
    let mut names: Vec<&String> = values.keys().collect();
    names.sort();
    let mut out = String::new();
    for name in names {
        let _ = writeln!(out, "{name} {}", values[name]);
    }
    out
}
