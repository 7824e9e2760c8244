//! Policy schemas: named labels with per-codec integer codes.
//!
//! A schema declares an ordered list of clearance levels (highest first),
//! compartments, and an optional project hierarchy whose edges point from
//! the including mark to the included one. Every label carries three codes,
//! one per codec: a bit position, an exponent index and a prime. Codes may
//! be written out in the policy document or assigned automatically: bit
//! positions and exponent indices count up from 0 in declaration order,
//! primes walk the ascending odd primes 3, 5, 7, ...
//!
//! Subjects and objects are labelled asymmetrically. An object carries
//! exactly one level plus marks and is encoded as written. A subject's
//! clearance is first expanded to its included form: the level pulls in
//! every strictly lower level and each project mark pulls in every project
//! it transitively includes. Compartments never expand.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::primes;

pub type SchemaId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LabelKind {
    Level,
    Compartment,
    Project,
}

/// At most one level, plus compartment and project marks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub marks: BTreeSet<String>,
}

impl LabelSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn of(level: Option<&str>, marks: &[&str]) -> Self {
        LabelSet {
            level: level.map(str::to_string),
            marks: marks.iter().map(|m| m.to_string()).collect(),
        }
    }

    /// Classify names against the schema. At most one of them may be a
    /// level; unknown names are rejected.
    pub fn from_names<'a>(
        schema: &PolicySchema,
        names: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self> {
        let mut set = LabelSet::default();
        for raw in names {
            let name = raw.trim();
            if name.is_empty() {
                continue;
            }
            match schema.kind(name) {
                Some(LabelKind::Level) => match &set.level {
                    Some(prev) if prev == name => {}
                    Some(prev) => {
                        return Err(Error::MultipleLevels(prev.clone(), name.to_string()))
                    }
                    None => set.level = Some(name.to_string()),
                },
                Some(_) => {
                    set.marks.insert(name.to_string());
                }
                None => return Err(Error::UnknownLabel(name.to_string())),
            }
        }
        Ok(set)
    }

    /// Every name in the set, level included.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = self.marks.clone();
        if let Some(l) = &self.level {
            out.insert(l.clone());
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.level.is_none() && self.marks.is_empty()
    }
}

impl fmt::Display for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let marks: Vec<&str> = self.marks.iter().map(String::as_str).collect();
        write!(
            f,
            "({}, {{{}}})",
            self.level.as_deref().unwrap_or("-"),
            marks.join(", ")
        )
    }
}

/// A subject clearance with its downward closure. Built only by
/// [`PolicySchema::expand_subject`], so `included` always covers the
/// written label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectClearance {
    label: LabelSet,
    included: BTreeSet<String>,
}

impl SubjectClearance {
    pub fn label(&self) -> &LabelSet {
        &self.label
    }

    /// The included form: level closure, project closure, compartments.
    pub fn included(&self) -> &BTreeSet<String> {
        &self.included
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyLabelName,
    DuplicateLabel(String),
    BadBase(u64),
    MissingAssignment { label: String, codec: &'static str },
    ForeignAssignment { label: String, codec: &'static str },
    DuplicateCode { codec: &'static str, code: String, first: String, second: String },
    NonPrimeCode { label: String, value: u64 },
    NonContiguousBits,
    ProjectEdgeUnknown { from: String, to: String },
    ProjectCycle(Vec<String>),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyLabelName => write!(f, "empty label name"),
            Violation::DuplicateLabel(n) => write!(f, "label `{n}` declared more than once"),
            Violation::BadBase(b) => write!(f, "expsum base must be at least 2, got {b}"),
            Violation::MissingAssignment { label, codec } => {
                write!(f, "label `{label}` has no {codec} code")
            }
            Violation::ForeignAssignment { label, codec } => {
                write!(f, "{codec} code assigned to unknown label `{label}`")
            }
            Violation::DuplicateCode { codec, code, first, second } => {
                write!(f, "{codec} code {code} assigned to both `{first}` and `{second}`")
            }
            Violation::NonPrimeCode { label, value } => {
                write!(f, "prime code {value} for `{label}` is not prime")
            }
            Violation::NonContiguousBits => {
                write!(f, "bit positions must cover 0..label count without gaps")
            }
            Violation::ProjectEdgeUnknown { from, to } => {
                write!(f, "project edge ({from}, {to}) references an undeclared project")
            }
            Violation::ProjectCycle(path) => {
                write!(f, "project hierarchy contains a cycle: {}", path.join(" -> "))
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

const DEFAULT_BASE: u64 = 3;

fn default_base() -> u64 {
    DEFAULT_BASE
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ProjectsDoc {
    #[serde(default)]
    nodes: Vec<String>,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct AssignmentsDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    bits: Option<BTreeMap<String, u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponents: Option<BTreeMap<String, u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    primes: Option<BTreeMap<String, u64>>,
}

/// On-disk shape of a policy document.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PolicyDoc {
    id: String,
    #[serde(default)]
    levels: Vec<String>,
    #[serde(default)]
    compartments: Vec<String>,
    #[serde(default)]
    projects: ProjectsDoc,
    #[serde(default = "default_base")]
    base: u64,
    #[serde(default)]
    assignments: AssignmentsDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

/// An immutable, eagerly validated label universe. Construction runs the
/// full validation once; accessors never re-check.
#[derive(Debug, Clone)]
pub struct PolicySchema {
    id: SchemaId,
    levels: Vec<String>,
    compartments: Vec<String>,
    project_nodes: Vec<String>,
    project_edges: Vec<(String, String)>,
    base: u64,
    bits: BTreeMap<String, u32>,
    exponents: BTreeMap<String, u32>,
    primes: BTreeMap<String, u64>,
    bit_labels: BTreeMap<u32, String>,
    exponent_labels: BTreeMap<u32, String>,
    prime_labels: BTreeMap<u64, String>,
    notes: Vec<String>,
    report: ValidationReport,
}

pub struct SchemaBuilder {
    id: String,
    levels: Vec<String>,
    compartments: Vec<String>,
    project_nodes: Vec<String>,
    project_edges: Vec<(String, String)>,
    base: u64,
    bits: Option<BTreeMap<String, u32>>,
    exponents: Option<BTreeMap<String, u32>>,
    primes: Option<BTreeMap<String, u64>>,
    notes: Vec<String>,
}

impl SchemaBuilder {
    pub fn levels<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.levels = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn compartments<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.compartments = names.into_iter().map(Into::into).collect();
        self
    }

    pub fn projects<I, S>(mut self, nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.project_nodes = nodes.into_iter().map(Into::into).collect();
        self
    }

    /// Register an inclusion edge. Unseen endpoints are appended to the
    /// project node list in order of appearance.
    pub fn project_edge(mut self, from: &str, to: &str) -> Self {
        for node in [from, to] {
            if !self.project_nodes.iter().any(|n| n == node) {
                self.project_nodes.push(node.to_string());
            }
        }
        self.project_edges.push((from.to_string(), to.to_string()));
        self
    }

    pub fn base(mut self, base: u64) -> Self {
        self.base = base;
        self
    }

    pub fn bit_codes(mut self, map: BTreeMap<String, u32>) -> Self {
        self.bits = Some(map);
        self
    }

    pub fn exponent_codes(mut self, map: BTreeMap<String, u32>) -> Self {
        self.exponents = Some(map);
        self
    }

    pub fn prime_codes(mut self, map: BTreeMap<String, u64>) -> Self {
        self.primes = Some(map);
        self
    }

    pub fn note(mut self, text: &str) -> Self {
        self.notes.push(text.to_string());
        self
    }

    /// Fill in any codec left unspecified, then validate.
    pub fn finish(self) -> PolicySchema {
        let order: Vec<String> = self
            .levels
            .iter()
            .chain(self.compartments.iter())
            .chain(self.project_nodes.iter())
            .cloned()
            .collect();
        let bits = self.bits.unwrap_or_else(|| {
            order.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect()
        });
        let exponents = self.exponents.unwrap_or_else(|| {
            order.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect()
        });
        let primes = self.primes.unwrap_or_else(|| {
            order.iter().zip(primes::odd_primes()).map(|(n, p)| (n.clone(), p)).collect()
        });
        PolicySchema::assemble(
            self.id,
            self.levels,
            self.compartments,
            self.project_nodes,
            self.project_edges,
            self.base,
            bits,
            exponents,
            primes,
            self.notes,
        )
    }
}

impl PolicySchema {
    pub fn build(id: &str) -> SchemaBuilder {
        SchemaBuilder {
            id: id.to_string(),
            levels: Vec::new(),
            compartments: Vec::new(),
            project_nodes: Vec::new(),
            project_edges: Vec::new(),
            base: DEFAULT_BASE,
            bits: None,
            exponents: None,
            primes: None,
            notes: Vec::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        id: String,
        levels: Vec<String>,
        compartments: Vec<String>,
        project_nodes: Vec<String>,
        project_edges: Vec<(String, String)>,
        base: u64,
        bits: BTreeMap<String, u32>,
        exponents: BTreeMap<String, u32>,
        primes: BTreeMap<String, u64>,
        notes: Vec<String>,
    ) -> Self {
        let bit_labels = bits.iter().map(|(n, &c)| (c, n.clone())).collect();
        let exponent_labels = exponents.iter().map(|(n, &c)| (c, n.clone())).collect();
        let prime_labels = primes.iter().map(|(n, &c)| (c, n.clone())).collect();
        let mut schema = PolicySchema {
            id,
            levels,
            compartments,
            project_nodes,
            project_edges,
            base,
            bits,
            exponents,
            primes,
            bit_labels,
            exponent_labels,
            prime_labels,
            notes,
            report: ValidationReport::default(),
        };
        schema.report = schema.run_validation();
        schema
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PolicyDoc = serde_json::from_str(text)?;
        let mut builder = PolicySchema::build(&doc.id)
            .levels(doc.levels)
            .compartments(doc.compartments)
            .projects(doc.projects.nodes)
            .base(doc.base);
        builder.project_edges = doc.projects.edges;
        builder.notes = doc.notes;
        builder.bits = doc.assignments.bits;
        builder.exponents = doc.assignments.exponents;
        builder.primes = doc.assignments.primes;
        Ok(builder.finish())
    }

    /// Canonical document with every code written out.
    pub fn to_json(&self) -> String {
        let doc = PolicyDoc {
            id: self.id.clone(),
            levels: self.levels.clone(),
            compartments: self.compartments.clone(),
            projects: ProjectsDoc {
                nodes: self.project_nodes.clone(),
                edges: self.project_edges.clone(),
            },
            base: self.base,
            assignments: AssignmentsDoc {
                bits: Some(self.bits.clone()),
                exponents: Some(self.exponents.clone()),
                primes: Some(self.primes.clone()),
            },
            notes: self.notes.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("policy document serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn label_count(&self) -> usize {
        self.levels.len() + self.compartments.len() + self.project_nodes.len()
    }

    /// Levels first (highest to lowest), then compartments, then projects.
    pub fn label_order(&self) -> impl Iterator<Item = &str> {
        self.levels
            .iter()
            .chain(self.compartments.iter())
            .chain(self.project_nodes.iter())
            .map(String::as_str)
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn compartments(&self) -> &[String] {
        &self.compartments
    }

    pub fn project_nodes(&self) -> &[String] {
        &self.project_nodes
    }

    pub fn project_edges(&self) -> &[(String, String)] {
        &self.project_edges
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn kind(&self, name: &str) -> Option<LabelKind> {
        if self.levels.iter().any(|l| l == name) {
            Some(LabelKind::Level)
        } else if self.compartments.iter().any(|c| c == name) {
            Some(LabelKind::Compartment)
        } else if self.project_nodes.iter().any(|p| p == name) {
            Some(LabelKind::Project)
        } else {
            None
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.kind(name).is_some()
    }

    pub fn bit(&self, name: &str) -> Option<u32> {
        self.bits.get(name).copied()
    }

    pub fn exponent(&self, name: &str) -> Option<u32> {
        self.exponents.get(name).copied()
    }

    pub fn prime(&self, name: &str) -> Option<u64> {
        self.primes.get(name).copied()
    }

    pub fn label_for_bit(&self, bit: u32) -> Option<&str> {
        self.bit_labels.get(&bit).map(String::as_str)
    }

    pub fn label_for_exponent(&self, exponent: u32) -> Option<&str> {
        self.exponent_labels.get(&exponent).map(String::as_str)
    }

    pub fn label_for_prime(&self, prime: u64) -> Option<&str> {
        self.prime_labels.get(&prime).map(String::as_str)
    }

    /// The report computed at construction time.
    pub fn validate(&self) -> &ValidationReport {
        &self.report
    }

    pub fn ensure_valid(&self) -> Result<()> {
        if self.report.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidSchema {
                id: self.id.clone(),
                report: self.report.to_string(),
            })
        }
    }

    fn run_validation(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for name in self.label_order() {
            if name.is_empty() {
                violations.push(Violation::EmptyLabelName);
            }
            if !seen.insert(name) {
                violations.push(Violation::DuplicateLabel(name.to_string()));
            }
        }
        if self.base < 2 {
            violations.push(Violation::BadBase(self.base));
        }

        fn check_codec<C: Copy + Ord + ToString>(
            violations: &mut Vec<Violation>,
            order: &[&str],
            map: &BTreeMap<String, C>,
            codec: &'static str,
        ) {
            for name in order {
                if !map.contains_key(*name) {
                    violations.push(Violation::MissingAssignment {
                        label: name.to_string(),
                        codec,
                    });
                }
            }
            let known: BTreeSet<&str> = order.iter().copied().collect();
            let mut by_code: BTreeMap<String, &str> = BTreeMap::new();
            for (label, code) in map {
                if !known.contains(label.as_str()) {
                    violations.push(Violation::ForeignAssignment {
                        label: label.clone(),
                        codec,
                    });
                }
                if let Some(first) = by_code.insert(code.to_string(), label) {
                    violations.push(Violation::DuplicateCode {
                        codec,
                        code: code.to_string(),
                        first: first.to_string(),
                        second: label.clone(),
                    });
                }
            }
        }

        let order: Vec<&str> = self.label_order().collect();
        check_codec(&mut violations, &order, &self.bits, "bit");
        check_codec(&mut violations, &order, &self.exponents, "exponent");
        check_codec(&mut violations, &order, &self.primes, "prime");

        for (label, &p) in &self.primes {
            if !primes::is_prime(p) {
                violations.push(Violation::NonPrimeCode {
                    label: label.clone(),
                    value: p,
                });
            }
        }

        // Bit positions double as vector indices, so they must be exactly
        // 0..n with no holes.
        let n = self.label_count();
        let positions: BTreeSet<u64> = self.bits.values().map(|&b| b as u64).collect();
        let expected: BTreeSet<u64> = (0..n as u64).collect();
        if self.bits.len() == n && positions != expected {
            violations.push(Violation::NonContiguousBits);
        }

        let nodes: BTreeSet<&str> = self.project_nodes.iter().map(String::as_str).collect();
        for (from, to) in &self.project_edges {
            if !nodes.contains(from.as_str()) || !nodes.contains(to.as_str()) {
                violations.push(Violation::ProjectEdgeUnknown {
                    from: from.clone(),
                    to: to.clone(),
                });
            }
        }
        if let Some(cycle) = self.find_project_cycle() {
            violations.push(Violation::ProjectCycle(cycle));
        }

        ValidationReport { violations }
    }

    fn find_project_cycle(&self) -> Option<Vec<String>> {
        // Iterative DFS with colouring; returns the first closed walk found.
        #[derive(Clone, Copy, PartialEq)]
        enum Colour {
            White,
            Grey,
            Black,
        }
        let mut colour: BTreeMap<&str, Colour> = self
            .project_nodes
            .iter()
            .map(|n| (n.as_str(), Colour::White))
            .collect();
        let mut stack_path: Vec<&str> = Vec::new();

        fn visit<'a>(
            node: &'a str,
            edges: &'a [(String, String)],
            colour: &mut BTreeMap<&'a str, Colour>,
            path: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            colour.insert(node, Colour::Grey);
            path.push(node);
            for (from, to) in edges {
                if from != node {
                    continue;
                }
                match colour.get(to.as_str()) {
                    Some(Colour::Grey) => {
                        let start = path.iter().position(|&p| p == to.as_str()).unwrap_or(0);
                        let mut cycle: Vec<String> =
                            path[start..].iter().map(|s| s.to_string()).collect();
                        cycle.push(to.clone());
                        return Some(cycle);
                    }
                    Some(Colour::White) => {
                        if let Some(c) = visit(to.as_str(), edges, colour, path) {
                            return Some(c);
                        }
                    }
                    _ => {}
                }
            }
            path.pop();
            colour.insert(node, Colour::Black);
            None
        }

        for node in &self.project_nodes {
            if colour.get(node.as_str()) == Some(&Colour::White) {
                if let Some(c) = visit(node, &self.project_edges, &mut colour, &mut stack_path) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Level plus marks must exist and sit in the right positions.
    pub fn check_label(&self, label: &LabelSet) -> Result<()> {
        if let Some(level) = &label.level {
            match self.kind(level) {
                Some(LabelKind::Level) => {}
                Some(_) => return Err(Error::NotALevel(level.clone())),
                None => return Err(Error::UnknownLabel(level.clone())),
            }
        }
        for mark in &label.marks {
            match self.kind(mark) {
                Some(LabelKind::Level) => return Err(Error::LevelInMarks(mark.clone())),
                Some(_) => {}
                None => return Err(Error::UnknownLabel(mark.clone())),
            }
        }
        Ok(())
    }

    /// The level itself plus every strictly lower level.
    fn level_closure(&self, level: &str) -> Vec<&str> {
        match self.levels.iter().position(|l| l == level) {
            Some(idx) => self.levels[idx..].iter().map(String::as_str).collect(),
            None => Vec::new(),
        }
    }

    /// Every project transitively included by `mark`, itself first.
    fn project_closure<'a>(&'a self, mark: &'a str) -> BTreeSet<&'a str> {
        let mut out: BTreeSet<&'a str> = BTreeSet::new();
        let mut queue: Vec<&'a str> = vec![mark];
        while let Some(node) = queue.pop() {
            if !out.insert(node) {
                continue;
            }
            for (from, to) in &self.project_edges {
                if from == node {
                    queue.push(to);
                }
            }
        }
        out
    }

    /// Expand a subject clearance to its included form. Only the subject
    /// side is ever expanded; objects are encoded as written.
    pub fn expand_subject(&self, label: &LabelSet) -> Result<SubjectClearance> {
        self.ensure_valid()?;
        self.check_label(label)?;
        let mut included: BTreeSet<String> = BTreeSet::new();
        if let Some(level) = &label.level {
            for l in self.level_closure(level) {
                included.insert(l.to_string());
            }
        }
        for mark in &label.marks {
            match self.kind(mark) {
                Some(LabelKind::Project) => {
                    for p in self.project_closure(mark) {
                        included.insert(p.to_string());
                    }
                }
                Some(LabelKind::Compartment) => {
                    included.insert(mark.clone());
                }
                _ => unreachable!("check_label admitted only compartments and projects"),
            }
        }
        Ok(SubjectClearance {
            label: label.clone(),
            included,
        })
    }

    /// Validate an object label: exactly one level, marks in place, never
    /// expanded.
    pub fn object_label(&self, label: &LabelSet) -> Result<LabelSet> {
        self.ensure_valid()?;
        self.check_label(label)?;
        if label.level.is_none() {
            return Err(Error::MissingLevel);
        }
        Ok(label.clone())
    }
}
