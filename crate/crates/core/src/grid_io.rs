//! MATPOWER case ingestion and the DC state-estimation Jacobian.
//!
//! Only the bus and branch tables (plus `baseMVA`) are interpreted. Generator
//! and cost tables, cell arrays such as `mpc.bus_name`, and comments are
//! skipped after a bracket-balance check.
//!
//! The measurement model is the pure DC one: states are the voltage angles
//! of the non-slack buses, branch susceptance is `1 / (x * tap)` (tap taken
//! as 1 when the column is zero or absent), resistance and charging are
//! ignored.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

/// Environment variable that replaces the builtin case directory.
pub const CASE_DIR_ENV: &str = "STEALTHRMT_CASE_DIR";

const CASE30: &str = include_str!("../cases/case30.m");
const CASE118: &str = include_str!("../cases/case118.m");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("malformed case: {0}")]
    MalformedCase(String),
    #[error("case has no slack bus (bus type 3)")]
    NoSlackBus,
    #[error("case has more than one slack bus: {0:?}")]
    MultipleSlackBuses(Vec<i64>),
    #[error("duplicate bus id {0}")]
    DuplicateBusId(i64),
    #[error("branch {branch} references unknown bus {bus}")]
    UnknownBus { branch: usize, bus: i64 },
    #[error("in-service branch {branch} ({from}-{to}) has zero reactance")]
    ZeroReactanceBranch { branch: usize, from: i64, to: i64 },
    #[error("in-service branch graph is not connected ({reached} of {total} buses reachable from the slack)")]
    Disconnected { reached: usize, total: usize },
    #[error("measurement set yields rank {rank} < {states} states")]
    RankDeficient { rank: usize, states: usize },
    #[error("cannot read case {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("unknown builtin case '{0}' (expected ieee30 or ieee118)")]
    UnknownBuiltin(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BusKind {
    PQ,
    PV,
    Slack,
}

impl BusKind {
    fn from_code(code: f64) -> Option<Self> {
        match code as i64 {
            1 if code == 1.0 => Some(BusKind::PQ),
            2 if code == 2.0 => Some(BusKind::PV),
            3 if code == 3.0 => Some(BusKind::Slack),
            _ => None,
        }
    }

    fn code(self) -> u8 {
        match self {
            BusKind::PQ => 1,
            BusKind::PV => 2,
            BusKind::Slack => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: i64,
    pub kind: BusKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from_bus: i64,
    pub to_bus: i64,
    /// Series reactance, per unit.
    pub reactance_x: f64,
    /// Off-nominal tap ratio; zero means a plain line.
    pub tap: f64,
    pub in_service: bool,
}

impl Branch {
    pub fn line(from_bus: i64, to_bus: i64, reactance_x: f64) -> Self {
        Branch { from_bus, to_bus, reactance_x, tap: 0.0, in_service: true }
    }

    /// DC susceptance `1 / (x * tap)`.
    pub fn susceptance(&self) -> f64 {
        let tap = if self.tap != 0.0 { self.tap } else { 1.0 };
        1.0 / (self.reactance_x * tap)
    }
}

/// Parsed and validated bus/branch topology.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCase {
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
}

impl GridCase {
    /// Builds a case and checks its invariants: unique ids, exactly one
    /// slack, known branch endpoints, nonzero in-service reactance and a
    /// connected in-service graph.
    pub fn new(base_mva: f64, buses: Vec<Bus>, branches: Vec<Branch>) -> Result<Self, GridError> {
        let case = GridCase { base_mva, buses, branches };
        case.validate()?;
        Ok(case)
    }

    fn validate(&self) -> Result<(), GridError> {
        let mut index = HashMap::new();
        for (i, bus) in self.buses.iter().enumerate() {
            if index.insert(bus.id, i).is_some() {
                return Err(GridError::DuplicateBusId(bus.id));
            }
        }
        let slacks: Vec<i64> = self.buses.iter().filter(|b| b.kind == BusKind::Slack).map(|b| b.id).collect();
        match slacks.len() {
            0 => return Err(GridError::NoSlackBus),
            1 => {}
            _ => return Err(GridError::MultipleSlackBuses(slacks)),
        }
        for (k, br) in self.branches.iter().enumerate() {
            for bus in [br.from_bus, br.to_bus] {
                if !index.contains_key(&bus) {
                    return Err(GridError::UnknownBus { branch: k, bus });
                }
            }
            if br.in_service && br.reactance_x == 0.0 {
                return Err(GridError::ZeroReactanceBranch { branch: k, from: br.from_bus, to: br.to_bus });
            }
        }

        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in self.branches.iter().filter(|b| b.in_service) {
            let (a, b) = (index[&br.from_bus], index[&br.to_bus]);
            adj[a].push(b);
            adj[b].push(a);
        }
        let start = self.slack_index();
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        if reached != n {
            return Err(GridError::Disconnected { reached, total: n });
        }
        Ok(())
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn in_service_branches(&self) -> impl Iterator<Item = (usize, &Branch)> {
        self.branches.iter().enumerate().filter(|(_, b)| b.in_service)
    }

    pub fn bus_count(&self) -> usize {
        self.buses.len()
    }

    /// Number of angle states (bus count minus the slack).
    pub fn state_count(&self) -> usize {
        self.buses.len() - 1
    }

    pub fn slack_index(&self) -> usize {
        self.buses.iter().position(|b| b.kind == BusKind::Slack).expect("validated case has a slack bus")
    }

    pub fn slack_id(&self) -> i64 {
        self.buses[self.slack_index()].id
    }

    /// Writes the bus and branch tables back as a MATPOWER version 2 case.
    /// Columns the model does not interpret are written as zeros.
    pub fn to_matpower(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "function mpc = {name}");
        let _ = writeln!(out, "mpc.version = '2';");
        let _ = writeln!(out, "mpc.baseMVA = {};", fmt_num(self.base_mva));
        let _ = writeln!(out, "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin");
        let _ = writeln!(out, "mpc.bus = [");
        for b in &self.buses {
            let _ = writeln!(out, "\t{}\t{}\t0\t0\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;", b.id, b.kind.code());
        }
        let _ = writeln!(out, "];");
        let _ = writeln!(out, "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax");
        let _ = writeln!(out, "mpc.branch = [");
        for br in &self.branches {
            let _ = writeln!(
                out,
                "\t{}\t{}\t0\t{}\t0\t0\t0\t0\t{}\t0\t{}\t-360\t360;",
                br.from_bus,
                br.to_bus,
                fmt_num(br.reactance_x),
                fmt_num(br.tap),
                u8::from(br.in_service)
            );
        }
        let _ = writeln!(out, "];");
        out
    }
}

// Shortest representation that parses back to the same f64.
fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

/// Where a case comes from: one of the bundled IEEE cases or a file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseSource {
    Builtin(String),
    File(PathBuf),
}

impl CaseSource {
    /// `ieee30` / `ieee118` (also `case30` / `case118`) name builtins;
    /// anything else is a path.
    pub fn parse(spec: &str) -> Self {
        match spec {
            "ieee30" | "case30" | "ieee118" | "case118" => CaseSource::Builtin(spec.to_string()),
            other => CaseSource::File(PathBuf::from(other)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            CaseSource::Builtin(name) => name.clone(),
            CaseSource::File(p) => p.display().to_string(),
        }
    }

    /// Reads the case text. Builtins are looked up in `STEALTHRMT_CASE_DIR`
    /// first when that variable is set.
    pub fn read_text(&self) -> Result<String, GridError> {
        match self {
            CaseSource::File(path) => read_file(path),
            CaseSource::Builtin(name) => {
                let (file, text) = match name.as_str() {
                    "ieee30" | "case30" => ("case30.m", CASE30),
                    "ieee118" | "case118" => ("case118.m", CASE118),
                    other => return Err(GridError::UnknownBuiltin(other.to_string())),
                };
                match std::env::var_os(CASE_DIR_ENV) {
                    Some(dir) => read_file(&Path::new(&dir).join(file)),
                    None => Ok(text.to_string()),
                }
            }
        }
    }

    pub fn load(&self) -> Result<GridCase, GridError> {
        parse_matpower(&self.read_text()?)
    }
}

fn read_file(path: &Path) -> Result<String, GridError> {
    std::fs::read_to_string(path).map_err(|e| GridError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Bundled IEEE 30-bus case.
pub fn ieee30() -> GridCase {
    parse_matpower(CASE30).expect("bundled case30 parses")
}

/// Bundled IEEE 118-bus case.
pub fn ieee118() -> GridCase {
    parse_matpower(CASE118).expect("bundled case118 parses")
}

// ---------------------------------------------------------------------------
// Parser

fn malformed(msg: impl Into<String>) -> GridError {
    GridError::MalformedCase(msg.into())
}

/// Removes `%` comments, leaving quoted strings intact.
fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let mut in_str = false;
        let mut prev: Option<char> = None;
        for c in line.chars() {
            match c {
                '\'' => {
                    // A quote right after an identifier/closing bracket is a
                    // transpose, not a string delimiter.
                    let transpose =
                        !in_str && matches!(prev, Some(p) if p.is_alphanumeric() || p == ')' || p == ']' || p == '_');
                    if !transpose {
                        in_str = !in_str;
                    }
                }
                '%' | '#' if !in_str => break,
                _ => {}
            }
            out.push(c);
            prev = Some(c);
        }
        out.push('\n');
    }
    out
}

enum Value {
    Numeric(Vec<Vec<f64>>),
    Other,
}

/// Splits the script into `mpc.<field> = <value>` assignments.
fn assignments(src: &str) -> Result<BTreeMap<String, Value>, GridError> {
    let bytes = src.as_bytes();
    let mut out = BTreeMap::new();
    let mut i = 0;
    while let Some(off) = src[i..].find("mpc.") {
        let start = i + off;
        // must begin a statement (not e.g. `xmpc.`)
        if start > 0 {
            let p = bytes[start - 1] as char;
            if p.is_alphanumeric() || p == '_' || p == '.' {
                i = start + 4;
                continue;
            }
        }
        let mut j = start + 4;
        while j < bytes.len() && ((bytes[j] as char).is_alphanumeric() || bytes[j] == b'_') {
            j += 1;
        }
        let name = src[start + 4..j].to_string();
        let mut k = j;
        while k < bytes.len() && (bytes[k] == b' ' || bytes[k] == b'\t') {
            k += 1;
        }
        if k >= bytes.len() || bytes[k] != b'=' || bytes.get(k + 1) == Some(&b'=') {
            // indexed assignment or expression; not a table definition
            i = j;
            continue;
        }
        k += 1;
        while k < bytes.len() && (bytes[k] as char).is_whitespace() {
            k += 1;
        }
        if k >= bytes.len() {
            return Err(malformed(format!("mpc.{name} has no value")));
        }
        let (value, end) = match bytes[k] {
            b'[' => {
                let close = matching_close(src, k, b'[', b']')?;
                (parse_matrix(&name, &src[k + 1..close])?, close + 1)
            }
            b'{' => {
                let close = matching_close(src, k, b'{', b'}')?;
                (Value::Other, close + 1)
            }
            _ => {
                let end = src[k..].find([';', '\n']).map(|e| k + e).unwrap_or(src.len());
                let raw = src[k..end].trim();
                let v = match raw.parse::<f64>() {
                    Ok(x) => Value::Numeric(vec![vec![x]]),
                    Err(_) => Value::Other,
                };
                (v, end)
            }
        };
        out.insert(name, value);
        i = end;
    }
    Ok(out)
}

fn matching_close(src: &str, open_at: usize, open: u8, close: u8) -> Result<usize, GridError> {
    let bytes = src.as_bytes();
    let mut depth = 0usize;
    let mut in_str = false;
    for (idx, &b) in bytes.iter().enumerate().skip(open_at) {
        if b == b'\'' {
            in_str = !in_str;
            continue;
        }
        if in_str {
            continue;
        }
        if b == open {
            depth += 1;
        } else if b == close {
            depth -= 1;
            if depth == 0 {
                return Ok(idx);
            }
        }
    }
    Err(malformed("unbalanced brackets"))
}

fn parse_matrix(name: &str, body: &str) -> Result<Value, GridError> {
    let body = body.replace("...", " ");
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut numeric = true;
    for row_text in body.split([';', '\n']) {
        let tokens: Vec<&str> =
            row_text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        if tokens.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(tokens.len());
        for t in tokens {
            match parse_number(t) {
                Some(v) => row.push(v),
                None => {
                    numeric = false;
                    if name == "bus" || name == "branch" {
                        return Err(malformed(format!("non-numeric token '{t}' in mpc.{name}")));
                    }
                }
            }
        }
        rows.push(row);
    }
    if !numeric {
        return Ok(Value::Other);
    }
    if let Some(first) = rows.first() {
        let width = first.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != width) {
            return Err(malformed(format!(
                "mpc.{name} row {} has {} columns, expected {width}",
                bad + 1,
                rows[bad].len()
            )));
        }
    }
    Ok(Value::Numeric(rows))
}

fn parse_number(t: &str) -> Option<f64> {
    match t {
        "Inf" | "inf" => Some(f64::INFINITY),
        "-Inf" | "-inf" => Some(f64::NEG_INFINITY),
        "NaN" | "nan" => Some(f64::NAN),
        _ => t.parse::<f64>().ok(),
    }
}

fn as_integer(v: f64, what: &str) -> Result<i64, GridError> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(malformed(format!("{what} must be an integer, got {v}")));
    }
    Ok(v as i64)
}

/// Parses a MATPOWER (version 2) case script into a validated [`GridCase`].
pub fn parse_matpower(text: &str) -> Result<GridCase, GridError> {
    let src = strip_comments(text);
    let fields = assignments(&src)?;
    let table = |name: &str| -> Result<&Vec<Vec<f64>>, GridError> {
        match fields.get(name) {
            Some(Value::Numeric(rows)) => Ok(rows),
            Some(Value::Other) => Err(malformed(format!("mpc.{name} is not a numeric matrix"))),
            None => Err(malformed(format!("missing mpc.{name}"))),
        }
    };

    let base = table("baseMVA")?;
    let base_mva = match base.as_slice() {
        [row] if row.len() == 1 => row[0],
        _ => return Err(malformed("mpc.baseMVA must be a scalar")),
    };

    let bus_rows = table("bus")?;
    if bus_rows.is_empty() {
        return Err(malformed("mpc.bus is empty"));
    }
    if bus_rows[0].len() < 2 {
        return Err(malformed("mpc.bus needs at least the bus_i and type columns"));
    }
    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in bus_rows {
        let id = as_integer(row[0], "bus id")?;
        let kind =
            BusKind::from_code(row[1]).ok_or_else(|| malformed(format!("bus {id} has unsupported type {}", row[1])))?;
        buses.push(Bus { id, kind });
    }

    let branch_rows = table("branch")?;
    if let Some(first) = branch_rows.first() {
        if first.len() < 4 {
            return Err(malformed("mpc.branch needs at least fbus, tbus, r and x"));
        }
    }
    let mut branches = Vec::with_capacity(branch_rows.len());
    for row in branch_rows {
        branches.push(Branch {
            from_bus: as_integer(row[0], "branch from-bus")?,
            to_bus: as_integer(row[1], "branch to-bus")?,
            reactance_x: row[3],
            tap: row.get(8).copied().unwrap_or(0.0),
            in_service: row.get(10).map(|&s| s != 0.0).unwrap_or(true),
        });
    }

    GridCase::new(base_mva, buses, branches)
}

// ---------------------------------------------------------------------------
// DC Jacobian

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MeasurementSet {
    InjectionsOnly,
    FlowsOnly,
    #[default]
    InjectionsAndFlows,
}

/// Which measurements enter `H`. Exclusions name bus ids and branch
/// positions (row index in the branch table).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasurementConfig {
    pub set: MeasurementSet,
    pub excluded_buses: Vec<i64>,
    pub excluded_branches: Vec<usize>,
}

impl MeasurementConfig {
    pub fn new(set: MeasurementSet) -> Self {
        MeasurementConfig { set, ..Default::default() }
    }

    pub fn without_branches(mut self, branches: impl IntoIterator<Item = usize>) -> Self {
        self.excluded_branches.extend(branches);
        self
    }

    pub fn without_buses(mut self, buses: impl IntoIterator<Item = i64>) -> Self {
        self.excluded_buses.extend(buses);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measurement {
    Injection { bus: i64 },
    Flow { branch: usize },
}

/// Linear measurement model `y = H x + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub h: DMatrix<f64>,
    pub rows: Vec<Measurement>,
    /// Bus ids of the state columns, in order.
    pub state_buses: Vec<i64>,
    pub sigma2: Option<f64>,
}

impl MeasurementModel {
    /// Wraps an explicit matrix, checking `m >= n` and full column rank.
    pub fn from_matrix(h: DMatrix<f64>) -> Result<Self, GridError> {
        let (m, n) = h.shape();
        let rank = linalg::numerical_rank(&h);
        if m < n || rank < n {
            return Err(GridError::RankDeficient { rank, states: n });
        }
        Ok(MeasurementModel { h, rows: Vec::new(), state_buses: (1..=n as i64).collect(), sigma2: None })
    }

    pub fn m(&self) -> usize {
        self.h.nrows()
    }

    pub fn n(&self) -> usize {
        self.h.ncols()
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = Some(sigma2);
        self
    }
}

/// Builds the DC Jacobian with angle states at every non-slack bus.
pub fn build_dc_jacobian(case: &GridCase, config: &MeasurementConfig) -> Result<MeasurementModel, GridError> {
    let nb = case.bus_count();
    let slack = case.slack_index();
    let index: HashMap<i64, usize> = case.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    // bus position -> state column
    let mut column = vec![None; nb];
    let mut state_buses = Vec::with_capacity(nb.saturating_sub(1));
    for (i, bus) in case.buses.iter().enumerate() {
        if i != slack {
            column[i] = Some(state_buses.len());
            state_buses.push(bus.id);
        }
    }
    let n = state_buses.len();

    let mut bbus = DMatrix::<f64>::zeros(nb, nb);
    for (k, br) in case.in_service_branches() {
        if br.reactance_x == 0.0 {
            return Err(GridError::ZeroReactanceBranch { branch: k, from: br.from_bus, to: br.to_bus });
        }
        let b = br.susceptance();
        let (i, j) = (index[&br.from_bus], index[&br.to_bus]);
        bbus[(i, i)] += b;
        bbus[(j, j)] += b;
        bbus[(i, j)] -= b;
        bbus[(j, i)] -= b;
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let want_inj = matches!(config.set, MeasurementSet::InjectionsOnly | MeasurementSet::InjectionsAndFlows);
    let want_flow = matches!(config.set, MeasurementSet::FlowsOnly | MeasurementSet::InjectionsAndFlows);

    if want_inj {
        for (i, bus) in case.buses.iter().enumerate() {
            if i == slack || config.excluded_buses.contains(&bus.id) {
                continue;
            }
            let mut row = vec![0.0; n];
            for p in 0..nb {
                if let Some(c) = column[p] {
                    row[c] = bbus[(i, p)];
                }
            }
            rows.push(row);
            labels.push(Measurement::Injection { bus: bus.id });
        }
    }
    if want_flow {
        for (k, br) in case.in_service_branches() {
            if config.excluded_branches.contains(&k) {
                continue;
            }
            let b = br.susceptance();
            let mut row = vec![0.0; n];
            if let Some(c) = column[index[&br.from_bus]] {
                row[c] += b;
            }
            if let Some(c) = column[index[&br.to_bus]] {
                row[c] -= b;
            }
            rows.push(row);
            labels.push(Measurement::Flow { branch: k });
        }
    }

    let m = rows.len();
    let h = DMatrix::from_fn(m, n, |r, c| rows[r][c]);
    let rank = linalg::numerical_rank(&h);
    if m < n || rank < n {
        return Err(GridError::RankDeficient { rank, states: n });
    }
    Ok(MeasurementModel { h, rows: labels, state_buses, sigma2: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring3() -> GridCase {
        GridCase::new(
            100.0,
            vec![
                Bus { id: 1, kind: BusKind::Slack },
                Bus { id: 2, kind: BusKind::PQ },
                Bus { id: 3, kind: BusKind::PQ },
            ],
            vec![Branch::line(1, 2, 1.0), Branch::line(2, 3, 1.0), Branch::line(1, 3, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn ring_jacobian_matches_hand_computation() {
        let model = build_dc_jacobian(&ring3(), &MeasurementConfig::default()).unwrap();
        let expected = DMatrix::from_row_slice(5, 2, &[2.0, -1.0, -1.0, 2.0, -1.0, 0.0, 1.0, -1.0, 0.0, -1.0]);
        assert_eq!(model.h, expected);
        assert_eq!((model.m(), model.n()), (5, 2));
    }

    #[test]
    fn single_branch_flow_only() {
        let case = GridCase::new(
            100.0,
            vec![Bus { id: 1, kind: BusKind::Slack }, Bus { id: 2, kind: BusKind::PV }],
            vec![Branch::line(1, 2, 1.0)],
        )
        .unwrap();
        let model = build_dc_jacobian(&case, &MeasurementConfig::new(MeasurementSet::FlowsOnly)).unwrap();
        assert_eq!(model.h, DMatrix::from_row_slice(1, 1, &[-1.0]));
    }

    #[test]
    fn all_flows_deselected_is_rank_deficient() {
        let cfg = MeasurementConfig::new(MeasurementSet::FlowsOnly).without_branches(0..3);
        assert_eq!(build_dc_jacobian(&ring3(), &cfg), Err(GridError::RankDeficient { rank: 0, states: 2 }));
    }

    #[test]
    fn injection_rows_of_full_susceptance_sum_to_zero() {
        let case = ieee30();
        let model = build_dc_jacobian(&case, &MeasurementConfig::new(MeasurementSet::InjectionsOnly)).unwrap();
        // The deleted slack column carries minus the row sum of the kept ones.
        let slack = case.slack_id();
        let slack_neighbours: Vec<i64> = case
            .in_service_branches()
            .filter_map(|(_, b)| {
                if b.from_bus == slack {
                    Some(b.to_bus)
                } else if b.to_bus == slack {
                    Some(b.from_bus)
                } else {
                    None
                }
            })
            .collect();
        for (r, label) in model.rows.iter().enumerate() {
            let Measurement::Injection { bus } = label else { unreachable!() };
            let sum: f64 = model.h.row(r).iter().sum();
            if slack_neighbours.contains(bus) {
                assert!(sum > 0.0);
            } else {
                assert!(sum.abs() < 1e-9, "bus {bus} row sum {sum}");
            }
        }
    }

    #[test]
    fn tap_divides_susceptance() {
        let text = "function mpc = t\nmpc.baseMVA = 100;\nmpc.bus = [1 3; 2 1];\n\
                    mpc.branch = [1 2 0 0.5 0 0 0 0 0.8 0 1];\n";
        let case = parse_matpower(text).unwrap();
        let model = build_dc_jacobian(&case, &MeasurementConfig::new(MeasurementSet::FlowsOnly)).unwrap();
        assert!((model.h[(0, 0)] + 2.5).abs() < 1e-15);
        let case118 = ieee118();
        let tapped = case118.branches().iter().filter(|b| b.tap != 0.0 && b.tap != 1.0).count();
        assert!(tapped > 0);
    }

    #[test]
    fn out_of_service_branches_are_dropped() {
        let text = "mpc.baseMVA = 100;\nmpc.bus = [1 3; 2 1; 3 1];\n\
                    mpc.branch = [1 2 0 1 0 0 0 0 0 0 1; 2 3 0 1 0 0 0 0 0 0 1; 1 3 0 0 0 0 0 0 0 0 0];\n";
        let case = parse_matpower(text).unwrap();
        assert_eq!(case.in_service_branches().count(), 2);
        let model = build_dc_jacobian(&case, &MeasurementConfig::default()).unwrap();
        assert_eq!(model.m(), 4);
    }

    #[test]
    fn ieee30_goldens() {
        let case = ieee30();
        assert_eq!(case.bus_count(), 30);
        assert_eq!(case.state_count(), 29);
        assert_eq!(case.in_service_branches().count(), 41);
        let model = build_dc_jacobian(&case, &MeasurementConfig::default()).unwrap();
        assert_eq!(model.m(), 29 + 41);
        assert_eq!(linalg::numerical_rank(&model.h), 29);
    }

    #[test]
    fn ieee118_goldens() {
        let case = ieee118();
        assert_eq!(case.bus_count(), 118);
        assert_eq!(case.state_count(), 117);
        let model = build_dc_jacobian(&case, &MeasurementConfig::default()).unwrap();
        assert_eq!(model.m(), 117 + case.in_service_branches().count());
        assert_eq!(linalg::numerical_rank(&model.h), 117);
    }

    #[test]
    fn parser_error_paths() {
        assert!(matches!(parse_matpower(""), Err(GridError::MalformedCase(_))));
        let no_slack = "mpc.baseMVA = 100;\nmpc.bus = [1 1; 2 1];\nmpc.branch = [1 2 0 1];";
        assert_eq!(parse_matpower(no_slack), Err(GridError::NoSlackBus));
        let dup = "mpc.baseMVA = 100;\nmpc.bus = [1 3; 1 1];\nmpc.branch = [1 2 0 1];";
        assert_eq!(parse_matpower(dup), Err(GridError::DuplicateBusId(1)));
        let token = "mpc.baseMVA = 100;\nmpc.bus = [1 3; 2 x];\nmpc.branch = [1 2 0 1];";
        assert!(matches!(parse_matpower(token), Err(GridError::MalformedCase(_))));
        let unbalanced = "mpc.baseMVA = 100;\nmpc.bus = [1 3; 2 1;\nmpc.branch = [1 2 0 1];";
        assert!(matches!(parse_matpower(unbalanced), Err(GridError::MalformedCase(_))));
        let no_branch = "mpc.baseMVA = 100;\nmpc.bus = [1 3; 2 1];";
        assert!(matches!(parse_matpower(no_branch), Err(GridError::MalformedCase(_))));
        let island = "mpc.baseMVA = 100;\nmpc.bus = [1 3; 2 1; 3 1];\nmpc.branch = [1 2 0 1];";
        assert!(matches!(parse_matpower(island), Err(GridError::Disconnected { .. })));
        let zero_x = "mpc.baseMVA = 100;\nmpc.bus = [1 3; 2 1];\nmpc.branch = [1 2 0 0];";
        assert!(matches!(parse_matpower(zero_x), Err(GridError::ZeroReactanceBranch { .. })));
    }

    #[test]
    fn comments_gen_and_cell_arrays_are_ignored() {
        let text = "function mpc = demo\n% header % comment\nmpc.version = '2';\n\
                    mpc.baseMVA = 100; % trailing\n\
                    mpc.bus = [\n\t1\t3;  % slack\n\t2\t1;\n];\n\
                    mpc.gen = [1 0 0 Inf -Inf];\n\
                    mpc.branch = [1, 2, 0.01, 0.25];\n\
                    mpc.bus_name = {\n\t'A % not a comment';\n\t'B';\n};\n";
        let case = parse_matpower(text).unwrap();
        assert_eq!(case.bus_count(), 2);
        assert_eq!(case.branches()[0].reactance_x, 0.25);
    }

    #[test]
    fn matpower_round_trip_is_stable() {
        let case = ieee118();
        let again = parse_matpower(&case.to_matpower("case118")).unwrap();
        assert_eq!(case, again);
    }
}
