// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

//! Derived-gate estimates: fidelities multiply and times add along a gate
//! identity. No credit is given for parallel execution.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::fidelity::GateReport;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ComposerError {
    #[error("identity for {target} uses unknown gate {name}")]
    MissingPrimitive { target: String, name: String },
    #[error("no identity registered for {0}")]
    NoIdentity(String),
    #[error("identity for {0} has no steps")]
    EmptyIdentity(String),
    #[error("dependency cycle through {0}")]
    Cycle(String),
    #[error("invalid entry {name}: {reason}")]
    InvalidEntry { name: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Produced by this simulator.
    Simulated,
    /// Constant taken as given (initialisation, readout).
    Assumed,
    /// Reference value.
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveGateStat {
    pub name: String,
    pub fidelity: f64,
    pub time_ns: f64,
    pub source: Source,
}

impl PrimitiveGateStat {
    pub fn new(name: &str, fidelity: f64, time_ns: f64, source: Source) -> Self {
        Self { name: name.into(), fidelity, time_ns, source }
    }

    pub fn validate(&self) -> Result<(), ComposerError> {
        let bad = |reason: &str| ComposerError::InvalidEntry { name: self.name.clone(), reason: reason.into() };
        if !(0.0..=1.0).contains(&self.fidelity) {
            return Err(bad("fidelity outside [0, 1]"));
        }
        if !(self.time_ns >= 0.0 && self.time_ns.is_finite()) {
            return Err(bad("time must be finite and ≥ 0"));
        }
        Ok(())
    }

    /// Simulated entry from a gate report.
    pub fn from_report(name: &str, r: &GateReport) -> Self {
        Self::new(name, r.gate_fidelity, r.duration, Source::Simulated)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateIdentity {
    pub target: String,
    pub steps: Vec<String>,
    #[serde(default)]
    pub note: String,
}

impl GateIdentity {
    pub fn new(target: &str, steps: &[&str], note: &str) -> Self {
        Self { target: target.into(), steps: steps.iter().map(|s| s.to_string()).collect(), note: note.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedGateStat {
    pub name: String,
    pub fidelity: f64,
    pub time_ns: f64,
    pub identity: GateIdentity,
    /// Flattened primitive chain in application order.
    pub chain: Vec<String>,
}

impl DerivedGateStat {
    fn start(identity: &GateIdentity) -> Self {
        Self { name: identity.target.clone(), fidelity: 1.0, time_ns: 0.0, identity: identity.clone(), chain: vec![] }
    }

    fn push(&mut self, name: &str, fidelity: f64, time_ns: f64, chain: &[String]) {
        self.fidelity *= fidelity;
        self.time_ns += time_ns;
        if chain.is_empty() {
            self.chain.push(name.to_string());
        } else {
            self.chain.extend_from_slice(chain);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Fidelity,
    Time,
}

/// Gate statistics and identities. Map ordering keeps every query
/// independent of insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    #[serde(default)]
    pub entries: BTreeMap<String, PrimitiveGateStat>,
    #[serde(default)]
    pub identities: Vec<GateIdentity>,
    /// Reference values of derived rows, for comparison only.
    #[serde(default)]
    pub reference: BTreeMap<String, PrimitiveGateStat>,
}

impl Catalog {
    pub fn insert(&mut self, stat: PrimitiveGateStat) -> Result<(), ComposerError> {
        stat.validate()?;
        self.entries.insert(stat.name.clone(), stat);
        Ok(())
    }

    pub fn add_identity(&mut self, identity: GateIdentity) -> Result<(), ComposerError> {
        if identity.steps.is_empty() {
            return Err(ComposerError::EmptyIdentity(identity.target));
        }
        self.identities.push(identity);
        Ok(())
    }

    pub fn identities_for(&self, target: &str) -> Vec<&GateIdentity> {
        let mut v: Vec<&GateIdentity> = self.identities.iter().filter(|i| i.target == target).collect();
        v.sort();
        v
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serialises")
    }

    /// Every step must be an entry or the target of some identity.
    pub fn validate(&self) -> Result<(), ComposerError> {
        for e in self.entries.values() {
            e.validate()?;
        }
        let targets: BTreeSet<&str> = self.identities.iter().map(|i| i.target.as_str()).collect();
        for id in &self.identities {
            if id.steps.is_empty() {
                return Err(ComposerError::EmptyIdentity(id.target.clone()));
            }
            for s in &id.steps {
                if !self.entries.contains_key(s) && !targets.contains(s.as_str()) {
                    return Err(ComposerError::MissingPrimitive { target: id.target.clone(), name: s.clone() });
                }
            }
        }
        self.dependency_graph().map(|_| ())
    }

    fn resolve(&self, name: &str, owner: &str, stack: &mut Vec<String>) -> Result<(f64, f64, Vec<String>), ComposerError> {
        if let Some(e) = self.entries.get(name) {
            return Ok((e.fidelity, e.time_ns, vec![]));
        }
        if self.identities.iter().all(|i| i.target != name) {
            return Err(ComposerError::MissingPrimitive { target: owner.into(), name: name.into() });
        }
        if stack.iter().any(|s| s == name) {
            return Err(ComposerError::Cycle(name.into()));
        }
        stack.push(name.into());
        let best = self.best_inner(name, Objective::Fidelity, stack)?;
        stack.pop();
        Ok((best.fidelity, best.time_ns, best.chain))
    }

    fn compose_inner(&self, identity: &GateIdentity, stack: &mut Vec<String>) -> Result<DerivedGateStat, ComposerError> {
        if identity.steps.is_empty() {
            return Err(ComposerError::EmptyIdentity(identity.target.clone()));
        }
        let mut out = DerivedGateStat::start(identity);
        for s in &identity.steps {
            let (f, t, chain) = self.resolve(s, &identity.target, stack)?;
            out.push(s, f, t, &chain);
        }
        Ok(out)
    }

    /// Product of fidelities and sum of times along `identity`. Steps that are
    /// catalog entries are used as stated; other steps are derived through
    /// their highest-fidelity identity.
    pub fn compose(&self, identity: &GateIdentity) -> Result<DerivedGateStat, ComposerError> {
        self.compose_inner(identity, &mut vec![identity.target.clone()])
    }

    /// Continues a composition with more steps; composing A then B this way is
    /// identical to composing the concatenated list.
    pub fn extend(&self, base: &DerivedGateStat, steps: &[String]) -> Result<DerivedGateStat, ComposerError> {
        let mut out = base.clone();
        let mut stack = vec![base.identity.target.clone()];
        for s in steps {
            let (f, t, chain) = self.resolve(s, &base.identity.target, &mut stack)?;
            out.push(s, f, t, &chain);
            out.identity.steps.push(s.clone());
        }
        Ok(out)
    }

    fn best_inner(&self, target: &str, objective: Objective, stack: &mut Vec<String>) -> Result<DerivedGateStat, ComposerError> {
        let candidates = self.identities_for(target);
        if candidates.is_empty() {
            return Err(ComposerError::NoIdentity(target.into()));
        }
        let mut best: Option<DerivedGateStat> = None;
        for id in candidates {
            let d = self.compose_inner(id, stack)?;
            let better = match &best {
                None => true,
                Some(b) => {
                    let key = |x: &DerivedGateStat| match objective {
                        Objective::Fidelity => (x.fidelity, -x.time_ns),
                        Objective::Time => (-x.time_ns, x.fidelity),
                    };
                    key(&d) > key(b)
                }
            };
            if better {
                best = Some(d);
            }
        }
        Ok(best.expect("non-empty"))
    }

    /// Best identity for `target` by the objective, ties broken by the other
    /// metric and then by identity order.
    pub fn best_identity(&self, target: &str, objective: Objective) -> Result<DerivedGateStat, ComposerError> {
        self.best_inner(target, objective, &mut vec![target.to_string()])
    }

    /// Edges run from each step to the gates built from it.
    pub fn dependency_graph(&self) -> Result<DependencyGraph, ComposerError> {
        let mut g = DiGraph::<String, ()>::new();
        let mut nodes: BTreeMap<String, NodeIndex> = BTreeMap::new();
        let mut names: BTreeSet<&str> = self.entries.keys().map(String::as_str).collect();
        for id in &self.identities {
            names.insert(&id.target);
            names.extend(id.steps.iter().map(String::as_str));
        }
        for n in names {
            nodes.insert(n.to_string(), g.add_node(n.to_string()));
        }
        let mut edges: BTreeSet<(NodeIndex, NodeIndex)> = BTreeSet::new();
        for id in &self.identities {
            for s in &id.steps {
                edges.insert((nodes[s], nodes[&id.target]));
            }
        }
        for (a, b) in edges {
            g.add_edge(a, b, ());
        }
        if let Err(c) = petgraph::algo::toposort(&g, None) {
            return Err(ComposerError::Cycle(g[c.node_id()].clone()));
        }
        Ok(DependencyGraph { graph: g })
    }

    /// Best derived stats for every identity target, sorted by name.
    pub fn derived_table(&self, objective: Objective) -> Result<Vec<DerivedGateStat>, ComposerError> {
        let targets: BTreeSet<&str> = self.identities.iter().map(|i| i.target.as_str()).collect();
        targets.into_iter().map(|t| self.best_identity(t, objective)).collect()
    }
}

pub struct DependencyGraph {
    pub graph: DiGraph<String, ()>,
}

impl DependencyGraph {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Names `name` depends on, directly or through other derived gates.
    pub fn ancestors(&self, name: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let Some(start) = self.graph.node_indices().find(|&i| self.graph[i] == name) else {
            return out;
        };
        let mut todo = vec![start];
        while let Some(n) = todo.pop() {
            for p in self.graph.neighbors_directed(n, petgraph::Direction::Incoming) {
                if out.insert(self.graph[p].clone()) {
                    todo.push(p);
                }
            }
        }
        out
    }

    /// Nodes without incoming edges.
    pub fn sources(&self) -> BTreeSet<String> {
        self.graph
            .node_indices()
            .filter(|&i| self.graph.neighbors_directed(i, petgraph::Direction::Incoming).next().is_none())
            .map(|i| self.graph[i].clone())
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph gates {\n  rankdir=LR;\n");
        let mut names: Vec<&String> = self.graph.node_weights().collect();
        names.sort();
        for n in names {
            s.push_str(&format!("  \"{n}\";\n"));
        }
        let mut edges: Vec<(String, String)> = self
            .graph
            .edge_indices()
            .map(|e| {
                let (a, b) = self.graph.edge_endpoints(e).expect("edge");
                (self.graph[a].clone(), self.graph[b].clone())
            })
            .collect();
        edges.sort();
        for (a, b) in edges {
            s.push_str(&format!("  \"{a}\" -> \"{b}\";\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// Column of the reference gate table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighbor {
    Nearest,
    Third,
}

/// Reference primitive values at 25 mT: (name, time ns nn, time ns 3rd, fid % nn, fid % 3rd).
const PRIMITIVES: [(&str, f64, f64, f64, f64); 7] = [
    ("X_V", 16.0, 4.0, 96.1, 97.7),
    ("X_C", 330.0, 1000.0, 98.4, 96.9),
    ("X_N", 6200.0, 6300.0, 94.1, 96.6),
    ("CROT_C,V", 16.0, 4.0, 96.8, 92.7),
    ("CROT_V,C", 330.0, 1080.0, 97.9, 98.2),
    ("CROT_V,N", 6230.0, 6550.0, 91.0, 98.0),
    ("CROT_CN,V", 930.0, 630.0, 94.8, 97.4),
];

/// Reference derived rows, used as stated constituents and for comparison.
const DERIVED: [(&str, f64, f64, f64, f64); 19] = [
    ("Z_V", 32.0, 8.0, 92.0, 96.0),
    ("Z_C", 660.0, 2000.0, 97.0, 94.0),
    ("Z_N", 12500.0, 12700.0, 89.0, 93.0),
    ("H_V", 40.0, 10.0, 91.0, 94.0),
    ("H_C", 830.0, 2500.0, 96.0, 92.0),
    ("H_N", 15600.0, 15900.0, 86.0, 92.0),
    ("CNOT_C,V", 350.0, 1060.0, 91.0, 94.0),
    ("CNOT_V,C", 340.0, 1080.0, 90.0, 94.0),
    ("CNOT_V,N", 12500.0, 12900.0, 84.0, 94.0),
    ("CPHASE_C,N", 1860.0, 1260.0, 90.0, 95.0),
    ("CNOT_N,V", 43700.0, 44600.0, 51.0, 70.0),
    ("INIT_C", 790.0, 2240.0, 85.0, 82.0),
    ("INIT_N", 56300.0, 57600.0, 50.0, 66.0),
    ("SWAP_VC", 1030.0, 3200.0, 79.0, 71.0),
    ("SWAP_VN", 68700.0, 70400.0, 50.0, 61.0),
    ("BELL_VC", 1500.0, 4600.0, 84.0, 70.0),
    ("BELL_VN", 25000.0, 25800.0, 64.0, 83.0),
    ("BELLM_VC", 2750.0, 8000.0, 67.0, 50.0),
    ("BELLM_VN", 93900.0, 96400.0, 50.0, 50.0),
];

/// Rows whose reference fidelity is an upper bound ("< 50 %").
pub const BOUNDED_ROWS: [(&str, Neighbor); 3] =
    [("INIT_N", Neighbor::Nearest), ("SWAP_VN", Neighbor::Nearest), ("BELLM_VN", Neighbor::Nearest)];

/// Assumed vacancy initialisation and readout.
pub const INIT_V: (f64, f64) = (0.999, 100_000.0);
pub const MEAS_V: (f64, f64) = (0.999, 10_000.0);

fn pick(nb: Neighbor, nn: f64, third: f64) -> f64 {
    match nb {
        Neighbor::Nearest => nn,
        Neighbor::Third => third,
    }
}

/// Half-rotation entry: half the time, √F.
pub fn half_rotation(full: &PrimitiveGateStat, name: &str) -> PrimitiveGateStat {
    PrimitiveGateStat::new(name, full.fidelity.sqrt(), 0.5 * full.time_ns, full.source)
}

/// Identities of the default catalog.
pub fn default_identities() -> Vec<GateIdentity> {
    let mut v = Vec::new();
    for q in ["V", "C", "N"] {
        let x = format!("X_{q}");
        let y = format!("Y_{q}");
        let y90 = format!("Y90_{q}");
        v.push(GateIdentity::new(&format!("Z_{q}"), &[&x, &y], "Z = Y·X up to a global phase"));
        v.push(GateIdentity::new(&format!("H_{q}"), &[&x, &y, &y90], "H = Y(π/2)·Z"));
        v.push(GateIdentity::new(&format!("S_{q}"), &[&y90, &format!("X90_{q}")], "corrective z(π/2) as two in-plane π/2 rotations"));
    }
    let id = GateIdentity::new;
    v.extend([
        id("CNOT_C,V", &["CROT_C,V", "S_C"], "CiNOT plus corrective z-rotation on the control"),
        id("CNOT_V,C", &["CROT_V,C", "S_V"], "CiNOT plus corrective z-rotation on the control"),
        id("CNOT_V,N", &["CROT_V,N", "S_V"], "CiNOT plus corrective z-rotation on the control"),
        id("TOFFOLI_CN,V", &["CROT_CN,V", "S_C", "S_N"], "doubly controlled CiNOT plus corrective z-rotations"),
        id("CPHASE_C,N", &["CROT_CN,V", "CROT_CN,V"], "the square of the doubly controlled rotation is a C–N controlled phase"),
        id("CNOT_C,N", &["H_N", "CPHASE_C,N", "H_N"], "controlled phase between Hadamards on N"),
        id("CNOT_C,N", &["SWAP_VC", "CNOT_V,N", "SWAP_VC"], "CNOT_V,N conjugated by the V–C swap"),
        id("CNOT_N,V", &["H_V", "H_N", "CNOT_V,N", "H_V", "H_N"], "reversed CNOT via Hadamards on both qubits"),
        id("SWAP_VC", &["CNOT_V,C", "CNOT_C,V", "CNOT_V,C"], "three alternating CNOTs"),
        id("SWAP_VN", &["CNOT_V,N", "CNOT_N,V", "CNOT_V,N"], "three alternating CNOTs"),
        id("BELL_VC", &["CNOT_V,C", "H_V", "CNOT_V,C"], "maps |00⟩ to an odd-parity Bell state"),
        id("BELL_VC", &["CNOT_C,V", "H_C", "CNOT_C,V"], "roles of V and C exchanged; Bell vectors permuted"),
        id("BELL_VN", &["CNOT_V,N", "H_V", "CNOT_V,N"], "maps |00⟩ to an odd-parity Bell state"),
        id("BELLM_VN", &["BELL_VN", "SWAP_VN"], "Bell-basis rotation followed by the swap to the readout qubit"),
    ]);
    v
}

/// Catalog seeded with the reference primitive values for one carbon site,
/// Y equal to X, half rotations derived from the full ones, and the reference
/// derived rows as reference.
pub fn reference_catalog(nb: Neighbor) -> Catalog {
    let mut c = Catalog::default();
    for (name, tn, tt, fnn, ft) in PRIMITIVES {
        let s = PrimitiveGateStat::new(name, pick(nb, fnn, ft) / 100.0, pick(nb, tn, tt), Source::Tabulated);
        c.insert(s).expect("valid constant");
    }
    for q in ["V", "C", "N"] {
        let x = c.entries[&format!("X_{q}")].clone();
        let y = PrimitiveGateStat { name: format!("Y_{q}"), ..x.clone() };
        c.insert(half_rotation(&x, &format!("X90_{q}"))).expect("valid");
        c.insert(half_rotation(&x, &format!("Y90_{q}"))).expect("valid");
        c.insert(y).expect("valid");
    }
    c.insert(PrimitiveGateStat::new("INIT_V", INIT_V.0, INIT_V.1, Source::Assumed)).expect("valid");
    c.insert(PrimitiveGateStat::new("MEAS_V", MEAS_V.0, MEAS_V.1, Source::Assumed)).expect("valid");
    for (name, tn, tt, fnn, ft) in DERIVED {
        let s = PrimitiveGateStat::new(name, pick(nb, fnn, ft) / 100.0, pick(nb, tn, tt), Source::Tabulated);
        c.reference.insert(name.into(), s);
    }
    for id in default_identities() {
        c.add_identity(id).expect("non-empty");
    }
    c
}

/// Replaces primitive entries by simulated reports where available.
pub fn with_simulated(mut catalog: Catalog, reports: &[(&str, &GateReport)]) -> Catalog {
    for (name, r) in reports {
        let s = PrimitiveGateStat::from_report(name, r);
        if let Some(q) = name.strip_prefix("X_") {
            let y = PrimitiveGateStat { name: format!("Y_{q}"), ..s.clone() };
            catalog.entries.insert(format!("X90_{q}"), half_rotation(&s, &format!("X90_{q}")));
            catalog.entries.insert(format!("Y90_{q}"), half_rotation(&s, &format!("Y90_{q}")));
            catalog.entries.insert(y.name.clone(), y);
        }
        catalog.entries.insert(s.name.clone(), s);
    }
    catalog
}

/// Promotes reference derived rows to entries, so identities use them as
/// stated constituents.
pub fn with_reference_entries(mut catalog: Catalog, names: &[&str]) -> Catalog {
    for n in names {
        if let Some(r) = catalog.reference.get(*n).cloned() {
            catalog.entries.insert(r.name.clone(), r);
        }
    }
    catalog
}

pub const TABLE_CSV_HEADER: &str = "gate,time_ns,fidelity_pct,identity,reference_time_ns,reference_fidelity_pct";

pub fn table_csv(catalog: &Catalog, rows: &[DerivedGateStat]) -> String {
    use crate::{csv_field, fmt_sig};
    let mut s = String::from(TABLE_CSV_HEADER);
    s.push('\n');
    for e in catalog.entries.values() {
        s.push_str(&format!(
            "{},{},{},{},,\n",
            csv_field(&e.name),
            fmt_sig(e.time_ns),
            fmt_sig(100.0 * e.fidelity),
            match e.source {
                Source::Simulated => "simulated",
                Source::Assumed => "assumed",
                Source::Tabulated => "tabulated",
            }
        ));
    }
    for d in rows {
        let (rt, rf) = catalog
            .reference
            .get(&d.name)
            .map(|r| (fmt_sig(r.time_ns), fmt_sig(100.0 * r.fidelity)))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&d.name),
            fmt_sig(d.time_ns),
            fmt_sig(100.0 * d.fidelity),
            csv_field(&d.identity.steps.join(" ")),
            rt,
            rf
        ));
    }
    s
}
