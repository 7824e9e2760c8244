//! Per-process clearances and the write/disclosure decisions built on them.
//!
//! A subject never writes through a bare clearance. Each (subject, process)
//! pair carries its own clearance tuple, normally far below the subject's
//! personal one, and a write goes through only when subject AND tuple both
//! dominate the object. A compromised process is then capped at whatever
//! its tuple allows, not at what its owner could reach.
//!
//! Disclosure reuses the same registry: a context (briefing room, meeting
//! channel) is a process every participant holds a tuple for. The discloser
//! carries the burden; viewers are checked only when the caller opts in
//! via [`DisclosureOptions::require_viewer_dominance`].

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dominance::subset_oracle;
use crate::error::{Error, Result};
use crate::schema::{LabelSet, PolicySchema};

/// One registered clearance: what `subject` may reach when acting through
/// `process`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessTuple {
    pub subject: String,
    pub process: String,
    pub clearance: LabelSet,
}

/// All registered tuples, keyed by the (subject, process) pair. Insertion
/// order is preserved so listings and saved files stay diff-friendly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TupleRegistry {
    tuples: Vec<ProcessTuple>,
}

#[derive(Serialize, Deserialize)]
struct RegistryDoc {
    tuples: Vec<ProcessTuple>,
}

impl TupleRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// At most one tuple per (subject, process) pair.
    pub fn register(&mut self, tuple: ProcessTuple) -> Result<()> {
        if self.get(&tuple.subject, &tuple.process).is_some() {
            return Err(Error::DuplicateTuple {
                subject: tuple.subject,
                process: tuple.process,
            });
        }
        self.tuples.push(tuple);
        Ok(())
    }

    pub fn remove(&mut self, subject: &str, process: &str) -> Result<ProcessTuple> {
        match self
            .tuples
            .iter()
            .position(|t| t.subject == subject && t.process == process)
        {
            Some(idx) => Ok(self.tuples.remove(idx)),
            None => Err(Error::NoSuchTuple {
                subject: subject.to_string(),
                process: process.to_string(),
            }),
        }
    }

    pub fn get(&self, subject: &str, process: &str) -> Option<&ProcessTuple> {
        self.tuples
            .iter()
            .find(|t| t.subject == subject && t.process == process)
    }

    pub fn tuples(&self) -> &[ProcessTuple] {
        &self.tuples
    }

    /// True when any subject at all has a tuple for `process`. Decisions
    /// distinguish "nobody ever registered this process" (an error, the
    /// caller probably misspelled it) from "this subject has no tuple for
    /// it" (a deny).
    pub fn knows_process(&self, process: &str) -> bool {
        self.tuples.iter().any(|t| t.process == process)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RegistryDoc = serde_json::from_str(text)?;
        let mut registry = TupleRegistry::new();
        for tuple in doc.tuples {
            registry.register(tuple)?;
        }
        Ok(registry)
    }

    pub fn to_json(&self) -> String {
        let doc = RegistryDoc {
            tuples: self.tuples.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("registry serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Write-to-temp then rename, so a crash never leaves a torn registry.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_json())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DenyReason {
    /// The acting subject holds no tuple for the process.
    TupleMissing { subject: String, process: String },
    /// The subject's own clearance misses a label the object carries.
    ClearanceTooLow { subject: String, witness: String },
    /// The registered tuple's clearance misses a label the object carries.
    TupleTooLow {
        subject: String,
        process: String,
        witness: String,
    },
}

impl fmt::Display for DenyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DenyReason::TupleMissing { subject, process } => {
                write!(f, "no tuple registered for ({subject}, {process})")
            }
            DenyReason::ClearanceTooLow { subject, witness } => {
                write!(f, "subject `{subject}` lacks `{witness}`")
            }
            DenyReason::TupleTooLow {
                subject,
                process,
                witness,
            } => write!(f, "tuple ({subject}, {process}) lacks `{witness}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Allow,
    Deny(DenyReason),
}

impl Decision {
    pub fn allowed(&self) -> bool {
        matches!(self, Decision::Allow)
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Allow => write!(f, "ALLOW"),
            Decision::Deny(reason) => write!(f, "DENY: {reason}"),
        }
    }
}

/// Check a clearance against an object and name the first missing label.
fn dominates(
    schema: &PolicySchema,
    clearance: &LabelSet,
    object: &LabelSet,
) -> Result<Option<String>> {
    let expanded = schema.expand_subject(clearance)?;
    let verdict = subset_oracle(expanded.included(), &object.names());
    Ok(verdict.witness().map(str::to_string))
}

/// May `subject`, acting through `process`, write `object`?
///
/// ALLOW requires all three: the pair is registered, the subject's own
/// clearance dominates the object, and the tuple's clearance dominates the
/// object. A process nobody registered is an error, not a deny.
pub fn check_write_via_process(
    schema: &PolicySchema,
    registry: &TupleRegistry,
    subject: &str,
    subject_clearance: &LabelSet,
    process: &str,
    object: &LabelSet,
) -> Result<Decision> {
    let object = schema.object_label(object)?;
    if !registry.knows_process(process) {
        return Err(Error::UnknownProcess(process.to_string()));
    }
    let tuple = match registry.get(subject, process) {
        Some(t) => t,
        None => {
            return Ok(Decision::Deny(DenyReason::TupleMissing {
                subject: subject.to_string(),
                process: process.to_string(),
            }))
        }
    };
    if let Some(witness) = dominates(schema, subject_clearance, &object)? {
        return Ok(Decision::Deny(DenyReason::ClearanceTooLow {
            subject: subject.to_string(),
            witness,
        }));
    }
    if let Some(witness) = dominates(schema, &tuple.clearance, &object)? {
        return Ok(Decision::Deny(DenyReason::TupleTooLow {
            subject: subject.to_string(),
            process: process.to_string(),
            witness,
        }));
    }
    Ok(Decision::Allow)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DisclosureOptions {
    /// Off by default: the discloser carries the burden of judging the
    /// audience, mirroring how a spoken briefing works. Switch on to also
    /// require every viewer's tuple to dominate the object.
    pub require_viewer_dominance: bool,
}

/// May `discloser` show `object` to `viewer` inside `context`?
///
/// Both parties must hold tuples for the context. The discloser must
/// dominate the object both personally and through their tuple. The viewer
/// is checked only under [`DisclosureOptions::require_viewer_dominance`].
#[allow(clippy::too_many_arguments)]
pub fn check_disclosure_in_context(
    schema: &PolicySchema,
    registry: &TupleRegistry,
    discloser: &str,
    discloser_clearance: &LabelSet,
    viewer: &str,
    context: &str,
    object: &LabelSet,
    options: DisclosureOptions,
) -> Result<Decision> {
    let object = schema.object_label(object)?;
    if !registry.knows_process(context) {
        return Err(Error::UnknownProcess(context.to_string()));
    }
    let discloser_tuple = match registry.get(discloser, context) {
        Some(t) => t,
        None => {
            return Ok(Decision::Deny(DenyReason::TupleMissing {
                subject: discloser.to_string(),
                process: context.to_string(),
            }))
        }
    };
    let viewer_tuple = match registry.get(viewer, context) {
        Some(t) => t,
        None => {
            return Ok(Decision::Deny(DenyReason::TupleMissing {
                subject: viewer.to_string(),
                process: context.to_string(),
            }))
        }
    };
    if let Some(witness) = dominates(schema, discloser_clearance, &object)? {
        return Ok(Decision::Deny(DenyReason::ClearanceTooLow {
            subject: discloser.to_string(),
            witness,
        }));
    }
    if let Some(witness) = dominates(schema, &discloser_tuple.clearance, &object)? {
        return Ok(Decision::Deny(DenyReason::TupleTooLow {
            subject: discloser.to_string(),
            process: context.to_string(),
            witness,
        }));
    }
    if options.require_viewer_dominance {
        if let Some(witness) = dominates(schema, &viewer_tuple.clearance, &object)? {
            return Ok(Decision::Deny(DenyReason::TupleTooLow {
                subject: viewer.to_string(),
                process: context.to_string(),
                witness,
            }));
        }
    }
    Ok(Decision::Allow)
}
