//! Tagged record storage: every row carries its object label as one
//! integer token, and retrieval is a dominance filter over those tokens.
//!
//! The store itself never interprets payload fields. Ingest reads CSV with
//! a `labels` column, tags each row, and from then on the only question a
//! store answers is "which rows does this subject token dominate". Stores
//! are immutable; retagging builds a new store.
//!
//! On disk a store is line-oriented and tab-separated so tokens and ids
//! stay grep-able:
//!
//! ```text
//! #ibac-store<TAB>v1<TAB><schema-id><TAB><scheme-tag>
//! p:663<TAB>r1<TAB>name=Karen<TAB>room=4.12
//! ```

use std::collections::BTreeSet;
use std::path::Path;

use crate::codec::{self, Scheme, Token};
use crate::dominance::{self, DominanceVerdict};
use crate::error::{Error, Result};
use crate::schema::{LabelSet, PolicySchema};

const MAGIC: &str = "#ibac-store";
const VERSION: &str = "v1";

/// One stored row: payload fields in their original column order plus the
/// object tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedRecord {
    pub id: String,
    pub fields: Vec<(String, String)>,
    pub tag: Token,
}

impl TaggedRecord {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// An immutable collection of tagged records under one schema and scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordStore {
    schema_id: String,
    scheme: Scheme,
    records: Vec<TaggedRecord>,
}

impl RecordStore {
    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn records(&self) -> &[TaggedRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&TaggedRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Build a store from CSV text. The `labels` column is required and
    /// holds whitespace-separated label names forming the row's object
    /// label (exactly one level). An `id` column is used when present,
    /// otherwise rows are numbered from 1. Every other column becomes a
    /// payload field, order preserved.
    pub fn ingest_csv(schema: &PolicySchema, scheme: Scheme, csv_text: &str) -> Result<Self> {
        schema.ensure_valid()?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(csv_text.as_bytes());
        let headers = reader.headers()?.clone();
        let labels_col = headers
            .iter()
            .position(|h| h == "labels")
            .ok_or_else(|| Error::MissingColumn("labels".to_string()))?;
        let id_col = headers.iter().position(|h| h == "id");

        let mut records = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for (row_number, row) in reader.records().enumerate() {
            let row = row?;
            let id = match id_col {
                Some(col) => row.get(col).unwrap_or("").to_string(),
                None => (row_number + 1).to_string(),
            };
            if id.is_empty() {
                return Err(Error::StoreSyntax(format!(
                    "row {} has an empty id",
                    row_number + 1
                )));
            }
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateRow(id));
            }
            let names = row.get(labels_col).unwrap_or("");
            let label = LabelSet::from_names(schema, names.split_whitespace())?;
            let label = schema.object_label(&label)?;
            let tag = codec::encode(
                schema,
                scheme,
                label.names().iter().map(String::as_str),
            )?;
            let fields = headers
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != labels_col && Some(*i) != id_col)
                .map(|(i, h)| (h.to_string(), row.get(i).unwrap_or("").to_string()))
                .collect();
            records.push(TaggedRecord { id, fields, tag });
        }
        Ok(RecordStore {
            schema_id: schema.id().to_string(),
            scheme,
            records,
        })
    }

    /// Rows the subject dominates, in store order. The subject token must
    /// use the store's scheme; dominance runs on the scheme's native route.
    pub fn filter(&self, schema: &PolicySchema, subject: &Token) -> Result<Vec<&TaggedRecord>> {
        Ok(self
            .filter_with_verdicts(schema, subject)?
            .into_iter()
            .filter(|(_, v)| v.holds())
            .map(|(r, _)| r)
            .collect())
    }

    /// Every row paired with its verdict, for callers that render denials
    /// too.
    pub fn filter_with_verdicts(
        &self,
        schema: &PolicySchema,
        subject: &Token,
    ) -> Result<Vec<(&TaggedRecord, DominanceVerdict)>> {
        if subject.scheme() != self.scheme {
            return Err(Error::SchemeMismatch(format!(
                "store holds {} tokens, subject is {}",
                self.scheme.tag(),
                subject.scheme().tag()
            )));
        }
        self.records
            .iter()
            .map(|record| Ok((record, dominance::decide(schema, subject, &record.tag)?)))
            .collect()
    }

    /// A copy of the store with one row re-encoded under a new object
    /// label.
    pub fn retag(&self, schema: &PolicySchema, id: &str, labels: &LabelSet) -> Result<Self> {
        let label = schema.object_label(labels)?;
        let tag = codec::encode(
            schema,
            self.scheme,
            label.names().iter().map(String::as_str),
        )?;
        let mut out = self.clone();
        match out.records.iter_mut().find(|r| r.id == id) {
            Some(record) => record.tag = tag,
            None => return Err(Error::UnknownRow(id.to_string())),
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MAGIC}\t{VERSION}\t{}\t{}\n",
            self.schema_id,
            self.scheme.tag()
        );
        for record in &self.records {
            out.push_str(&record.tag.to_string());
            out.push('\t');
            out.push_str(&escape(&record.id));
            for (key, value) in &record.fields {
                out.push('\t');
                out.push_str(&escape(key));
                out.push('=');
                out.push_str(&escape(value));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(schema: &PolicySchema, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::StoreSyntax("empty file".to_string()))?;
        let parts: Vec<&str> = header.split('\t').collect();
        match parts.as_slice() {
            [MAGIC, VERSION, schema_id, scheme_tag] => {
                if *schema_id != schema.id() {
                    return Err(Error::StoreSyntax(format!(
                        "store belongs to schema `{schema_id}`, loaded against `{}`",
                        schema.id()
                    )));
                }
                let scheme = Scheme::parse_tag(scheme_tag)?;
                let mut records = Vec::new();
                let mut seen: BTreeSet<String> = BTreeSet::new();
                for (n, line) in lines.enumerate() {
                    if line.is_empty() {
                        continue;
                    }
                    let record = parse_record(schema, scheme, line)
                        .map_err(|e| match e {
                            Error::StoreSyntax(msg) => {
                                Error::StoreSyntax(format!("record {}: {msg}", n + 1))
                            }
                            other => other,
                        })?;
                    if !seen.insert(record.id.clone()) {
                        return Err(Error::DuplicateRow(record.id));
                    }
                    records.push(record);
                }
                Ok(RecordStore {
                    schema_id: schema_id.to_string(),
                    scheme,
                    records,
                })
            }
            [magic, version, ..] if *magic == MAGIC && *version != VERSION => Err(
                Error::StoreSyntax(format!("unsupported store version `{version}`")),
            ),
            _ => Err(Error::StoreSyntax(
                "missing `#ibac-store` header".to_string(),
            )),
        }
    }

    pub fn load(schema: &PolicySchema, path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(schema, &std::fs::read_to_string(path)?)
    }

    /// Write-to-temp then rename, same discipline as the tuple registry.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_text())?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn parse_record(schema: &PolicySchema, scheme: Scheme, line: &str) -> Result<TaggedRecord> {
    let mut parts = split_tabs(line);
    let token_text = parts
        .next()
        .ok_or_else(|| Error::StoreSyntax("missing token column".to_string()))?;
    let tag = Token::parse(&token_text, schema)?;
    if tag.scheme() != scheme {
        return Err(Error::StoreSyntax(format!(
            "token `{token_text}` does not match the header scheme"
        )));
    }
    let id = unescape(
        &parts
            .next()
            .ok_or_else(|| Error::StoreSyntax("missing id column".to_string()))?,
    )?;
    let mut fields = Vec::new();
    for part in parts {
        // keys escape `=`, so the first bare one is the separator
        let split = find_unescaped_eq(&part).ok_or_else(|| {
            Error::StoreSyntax(format!("field `{part}` has no key=value separator"))
        })?;
        fields.push((unescape(&part[..split])?, unescape(&part[split + 1..])?));
    }
    Ok(TaggedRecord { id, fields, tag })
}

// Tabs inside values are escaped, so a raw tab always separates columns.
fn split_tabs(line: &str) -> impl Iterator<Item = String> + '_ {
    line.split('\t').map(str::to_string)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '=' => out.push_str("\\="),
            other => out.push(other),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('=') => out.push('='),
            other => {
                return Err(Error::StoreSyntax(format!(
                    "bad escape `\\{}`",
                    other.map(String::from).unwrap_or_default()
                )))
            }
        }
    }
    Ok(out)
}

fn find_unescaped_eq(s: &str) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            b'=' => return Some(i),
            _ => i += 1,
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::PolicySchema;

    fn mi_schema() -> PolicySchema {
        PolicySchema::build("mi-universe")
            .levels(["TopSecret", "Secret", "Protected", "Public"])
            .compartments(["GCHQ", "MI5", "MI6"])
            .finish()
    }

    const CSV: &str = "\
id,name,labels
o1,alpha,Secret MI5
o2,bravo,Secret GCHQ MI6
o3,charlie,Public
";

    #[test]
    fn ingest_tags_rows_with_object_tokens() {
        let schema = mi_schema();
        let store = RecordStore::ingest_csv(&schema, Scheme::PrimeProd, CSV).unwrap();
        assert_eq!(store.len(), 3);
        // (Secret, {MI5}): 5 * 17 = 85
        assert_eq!(store.get("o1").unwrap().tag.to_string(), "p:85");
        // (Secret, {GCHQ, MI6}): 5 * 13 * 19 = 1235
        assert_eq!(store.get("o2").unwrap().tag.to_string(), "p:1235");
        assert_eq!(store.get("o1").unwrap().field("name"), Some("alpha"));
    }

    #[test]
    fn filter_returns_dominated_rows_in_store_order() {
        let schema = mi_schema();
        let store = RecordStore::ingest_csv(&schema, Scheme::PrimeProd, CSV).unwrap();
        // the worked subject: {Secret, Protected, Public, MI5, MI6} = 124355
        let subject = codec::encode(
            &schema,
            Scheme::PrimeProd,
            ["Secret", "Protected", "Public", "MI5", "MI6"],
        )
        .unwrap();
        let hits: Vec<&str> = store
            .filter(&schema, &subject)
            .unwrap()
            .iter()
            .map(|r| r.id.as_str())
            .collect();
        // o2 carries GCHQ which the subject lacks
        assert_eq!(hits, ["o1", "o3"]);
    }

    #[test]
    fn filter_rejects_a_token_from_another_scheme() {
        let schema = mi_schema();
        let store = RecordStore::ingest_csv(&schema, Scheme::PrimeProd, CSV).unwrap();
        let subject = codec::universe_token(&schema, Scheme::BitVec).unwrap();
        assert!(matches!(
            store.filter(&schema, &subject),
            Err(Error::SchemeMismatch(_))
        ));
    }

    #[test]
    fn ingest_requires_labels_column_single_level_and_unique_ids() {
        let schema = mi_schema();
        assert!(matches!(
            RecordStore::ingest_csv(&schema, Scheme::PrimeProd, "id,name\no1,x\n"),
            Err(Error::MissingColumn(c)) if c == "labels"
        ));
        assert!(matches!(
            RecordStore::ingest_csv(&schema, Scheme::PrimeProd, "id,labels\no1,MI5\n"),
            Err(Error::MissingLevel)
        ));
        assert!(matches!(
            RecordStore::ingest_csv(&schema, Scheme::PrimeProd, "id,labels\no1,Secret Public\n"),
            Err(Error::MultipleLevels(..))
        ));
        assert!(matches!(
            RecordStore::ingest_csv(
                &schema,
                Scheme::PrimeProd,
                "id,labels\no1,Public\no1,Public\n"
            ),
            Err(Error::DuplicateRow(r)) if r == "o1"
        ));
    }

    #[test]
    fn rows_without_an_id_column_are_numbered() {
        let schema = mi_schema();
        let store = RecordStore::ingest_csv(
            &schema,
            Scheme::BitVec,
            "name,labels\nalpha,Public\nbravo,Secret\n",
        )
        .unwrap();
        assert_eq!(store.records()[0].id, "1");
        assert_eq!(store.records()[1].id, "2");
    }

    #[test]
    fn text_form_round_trips_including_awkward_characters() {
        let schema = mi_schema();
        let csv = "id,note,labels\nr1,\"tab\there eq=sign \\ back\",Secret MI5\n";
        let store = RecordStore::ingest_csv(&schema, Scheme::PrimeProd, csv).unwrap();
        let text = store.to_text();
        let reloaded = RecordStore::from_text(&schema, &text).unwrap();
        assert_eq!(reloaded, store);
        assert_eq!(
            reloaded.get("r1").unwrap().field("note"),
            Some("tab\there eq=sign \\ back")
        );
        assert_eq!(reloaded.to_text(), text);
    }

    #[test]
    fn loading_against_the_wrong_schema_or_header_fails() {
        let schema = mi_schema();
        let store = RecordStore::ingest_csv(&schema, Scheme::PrimeProd, CSV).unwrap();
        let text = store.to_text();

        let other = PolicySchema::build("other")
            .levels(["High", "Low"])
            .finish();
        assert!(matches!(
            RecordStore::from_text(&other, &text),
            Err(Error::StoreSyntax(_))
        ));
        assert!(matches!(
            RecordStore::from_text(&schema, "not a store\n"),
            Err(Error::StoreSyntax(_))
        ));
        let unsupported = text.replace("\tv1\t", "\tv9\t");
        assert!(matches!(
            RecordStore::from_text(&schema, &unsupported),
            Err(Error::StoreSyntax(m)) if m.contains("version")
        ));
    }

    #[test]
    fn retag_moves_one_row_and_leaves_the_original_store_alone() {
        let schema = mi_schema();
        let store = RecordStore::ingest_csv(&schema, Scheme::PrimeProd, CSV).unwrap();
        let retagged = store
            .retag(
                &schema,
                "o3",
                &LabelSet::of(Some("TopSecret"), &["GCHQ"]),
            )
            .unwrap();
        // 3 * 13 = 39
        assert_eq!(retagged.get("o3").unwrap().tag.to_string(), "p:39");
        assert_eq!(store.get("o3").unwrap().tag.to_string(), "p:11");
        assert!(matches!(
            store.retag(&schema, "ghost", &LabelSet::of(Some("Public"), &[])),
            Err(Error::UnknownRow(_))
        ));
    }
}
