//! A self-contained walkthrough over a fictional service policy.
//!
//! The assets bundle a small label universe (four levels, three
//! compartments, a four-project hierarchy) and ten tagged personnel
//! records. [`run_demo`] filters the records for one subject and renders a
//! deterministic transcript: same inputs, same bytes, every run. That
//! stability is load-bearing, the CLI test diffs two runs.

use std::fmt::Write as _;

use crate::codec::{self, Scheme, Token};
use crate::error::Result;
use crate::schema::{LabelSet, PolicySchema};
use crate::store::RecordStore;

const POLICY_JSON: &str = include_str!("../assets/demo-policy.json");
const RECORDS_CSV: &str = include_str!("../assets/demo-records.csv");

/// The bundled `mi-demo-v1` policy.
pub fn demo_policy() -> PolicySchema {
    PolicySchema::from_json(POLICY_JSON).expect("bundled policy parses")
}

/// The bundled records, tagged with prime-product tokens.
pub fn demo_store(schema: &PolicySchema) -> Result<RecordStore> {
    RecordStore::ingest_csv(schema, Scheme::PrimeProd, RECORDS_CSV)
}

/// The demo subject: an MI6 secretary read into the overwatch project.
pub fn secretary_label() -> LabelSet {
    LabelSet::of(Some("Secret"), &["MI6", "overwatch"])
}

#[derive(Debug, Clone, Default)]
pub struct DemoOptions {
    /// Filter for this token instead of the secretary's. Must be a
    /// prime-product token under the demo policy.
    pub subject_token: Option<Token>,
    /// Also print the missing label behind every denial.
    pub verbose: bool,
}

/// Render the demo transcript: policy summary, subject token, one line per
/// record with `*` marking the rows the subject dominates.
pub fn run_demo(options: &DemoOptions) -> Result<String> {
    let schema = demo_policy();
    let store = demo_store(&schema)?;

    let mut out = String::new();
    writeln!(
        out,
        "policy {}: {} levels, {} compartments, {} projects",
        schema.id(),
        schema.levels().len(),
        schema.compartments().len(),
        schema.project_nodes().len()
    )
    .unwrap();

    let subject = match &options.subject_token {
        Some(token) => token.clone(),
        None => {
            let label = secretary_label();
            let expansion = schema.expand_subject(&label)?;
            let ordered: Vec<&str> = schema
                .label_order()
                .filter(|l| expansion.included().contains(*l))
                .collect();
            writeln!(out, "subject {label}").unwrap();
            writeln!(out, "included {{{}}}", ordered.join(", ")).unwrap();
            codec::encode(&schema, Scheme::PrimeProd, ordered)?
        }
    };
    writeln!(out, "token {subject}").unwrap();
    writeln!(out).unwrap();

    let verdicts = store.filter_with_verdicts(&schema, &subject)?;
    let id_width = verdicts.iter().map(|(r, _)| r.id.len()).max().unwrap_or(0);
    let tag_width = verdicts
        .iter()
        .map(|(r, _)| r.tag.to_string().len())
        .max()
        .unwrap_or(0);
    let mut starred = 0usize;
    for (record, verdict) in &verdicts {
        let mark = if verdict.holds() { '*' } else { ' ' };
        if verdict.holds() {
            starred += 1;
        }
        let name = record.field("name").unwrap_or("");
        write!(
            out,
            " {mark} {:<id_width$}  {:<tag_width$}  {name}",
            record.id,
            record.tag.to_string()
        )
        .unwrap();
        match verdict.witness() {
            Some(witness) if options.verbose => writeln!(out, "  [lacks {witness}]").unwrap(),
            _ => writeln!(out).unwrap(),
        }
    }
    writeln!(out).unwrap();
    writeln!(out, "{starred} of {} rows dominated", verdicts.len()).unwrap();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_policy_validates_and_pins_the_advertised_primes() {
        let schema = demo_policy();
        assert_eq!(schema.id(), "mi-demo-v1");
        assert!(schema.validate().is_ok());
        for (label, prime) in [
            ("Protected", 3),
            ("MI6", 13),
            ("borders", 17),
            ("overwatch", 29),
        ] {
            assert_eq!(schema.prime(label), Some(prime), "label {label}");
        }
    }

    #[test]
    fn karens_row_multiplies_out_to_663() {
        let schema = demo_policy();
        let store = demo_store(&schema).unwrap();
        let karen = store.get("r1").unwrap();
        assert_eq!(karen.field("name"), Some("Karen"));
        // Protected * MI6 * borders = 3 * 13 * 17
        assert_eq!(karen.tag.to_string(), "p:663");
    }

    #[test]
    fn secretary_token_and_stars_are_fixed() {
        let schema = demo_policy();
        let expansion = schema.expand_subject(&secretary_label()).unwrap();
        // Secret pulls in Protected and Public; overwatch pulls in the
        // whole project subtree
        assert_eq!(
            expansion.included().iter().map(String::as_str).collect::<Vec<_>>(),
            [
                "MI6", "Protected", "Public", "Secret", "borders", "cyber", "overwatch",
                "signals"
            ]
        );

        let transcript = run_demo(&DemoOptions::default()).unwrap();
        assert!(transcript.contains("token p:1698109413"), "{transcript}");
        let starred: Vec<&str> = transcript
            .lines()
            .filter(|l| l.starts_with(" * "))
            .map(|l| l.split_whitespace().nth(1).unwrap())
            .collect();
        assert_eq!(starred, ["r1", "r4", "r5", "r9", "r10"]);
        assert!(transcript.ends_with("5 of 10 rows dominated\n"));
    }

    #[test]
    fn transcript_is_byte_stable_and_verbose_names_witnesses() {
        let quiet = DemoOptions::default();
        assert_eq!(run_demo(&quiet).unwrap(), run_demo(&quiet).unwrap());

        let verbose = run_demo(&DemoOptions {
            verbose: true,
            ..DemoOptions::default()
        })
        .unwrap();
        // Tom's row is Secret MI5 and the secretary lacks MI5
        let tom = verbose.lines().find(|l| l.contains("Tom")).unwrap();
        assert!(tom.contains("[lacks MI5]"), "{tom}");
    }

    #[test]
    fn foreign_subject_token_overrides_the_secretary() {
        let schema = demo_policy();
        // Public only: dominates r4 alone
        let token = codec::encode(&schema, Scheme::PrimeProd, ["Public"]).unwrap();
        let transcript = run_demo(&DemoOptions {
            subject_token: Some(token),
            verbose: false,
        })
        .unwrap();
        assert!(transcript.contains("token p:11"));
        assert!(!transcript.contains("subject ("));
        assert!(transcript.ends_with("1 of 10 rows dominated\n"));
    }
}
