//! Five routes to the same read-access question.
//!
//! A subject may read an object when the subject's included label set
//! covers the object's label set. [`subset_oracle`] states that directly
//! on names and anchors everything else. The token routes answer it by
//! arithmetic alone:
//!
//! * [`bitvec_and`]: `subject AND object == object`
//! * [`complement_dot`]: the subject's complement vector over the universe
//!   dotted with the object vector must sum to zero (any scheme)
//! * [`expsum_walk`]: merge-walk of the two descending exponent-index
//!   sequences; the object may not hold an index the subject lacks
//! * [`prime_modulo`]: `subject mod object == 0`
//!
//! [`cross_check`] runs every route on the same pair and reports any
//! disagreement. The routes are proven interchangeable by test, never
//! collapsed into one implementation.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::codec::{self, Scheme, Token};
use crate::error::{Error, Result};
use crate::schema::PolicySchema;

pub type NameSet = BTreeSet<String>;

/// Outcome of one dominance test. `holds` is true exactly when `witness`
/// is absent; a denial always names an object label the subject lacks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceVerdict {
    holds: bool,
    witness: Option<String>,
}

impl DominanceVerdict {
    pub fn allow() -> Self {
        DominanceVerdict { holds: true, witness: None }
    }

    pub fn deny(witness: impl Into<String>) -> Self {
        DominanceVerdict { holds: false, witness: Some(witness.into()) }
    }

    pub fn holds(&self) -> bool {
        self.holds
    }

    pub fn witness(&self) -> Option<&str> {
        self.witness.as_deref()
    }
}

/// Set containment on plain names: the object must be a subset of the
/// subject's included form. Witness is the lexicographically least
/// missing label.
pub fn subset_oracle(subject_included: &NameSet, object: &NameSet) -> DominanceVerdict {
    for label in object {
        if !subject_included.contains(label) {
            return DominanceVerdict::deny(label.clone());
        }
    }
    DominanceVerdict::allow()
}

fn check_pair(schema: &PolicySchema, subject: &Token, object: &Token) -> Result<()> {
    schema.ensure_valid()?;
    for token in [subject, object] {
        if token.schema_id() != schema.id() {
            return Err(Error::SchemaMismatch {
                token: token.schema_id().to_string(),
                schema: schema.id().to_string(),
            });
        }
    }
    if subject.scheme() != object.scheme() {
        return Err(Error::SchemeMismatch(format!(
            "subject is {} but object is {}",
            subject.scheme().tag(),
            object.scheme().tag()
        )));
    }
    Ok(())
}

/// Bit-vector route: dominance holds when `subject AND object == object`.
pub fn bitvec_and(schema: &PolicySchema, subject: &Token, object: &Token) -> Result<DominanceVerdict> {
    check_pair(schema, subject, object)?;
    if subject.scheme() != Scheme::BitVec {
        return Err(Error::SchemeMismatch(format!(
            "bitvec test got {} tokens",
            subject.scheme().tag()
        )));
    }
    let masked = subject.value() & object.value();
    if &masked == object.value() {
        return Ok(DominanceVerdict::allow());
    }
    // Bits the object holds beyond the subject; the lowest names the witness.
    let encroaching = object.value() ^ &masked;
    let pos = encroaching.trailing_zeros().expect("nonzero difference");
    let label = schema
        .label_for_bit(pos as u32)
        .expect("token bits map to labels");
    Ok(DominanceVerdict::deny(label))
}

/// Dot product of the subject's complement vector with the object vector,
/// in the scheme's own code values. Zero exactly when no object label
/// falls outside the subject.
pub fn complement_dot_value(
    schema: &PolicySchema,
    subject: &Token,
    object: &Token,
) -> Result<(BigUint, Option<String>)> {
    check_pair(schema, subject, object)?;
    let subject_names = codec::decode(schema, subject)?;
    let object_names = codec::decode(schema, object)?;
    let mut dot = BigUint::zero();
    let mut first_hit: Option<String> = None;
    for name in schema.label_order() {
        if object_names.contains(name) && !subject_names.contains(name) {
            let code = match subject.scheme() {
                Scheme::BitVec => BigUint::from(1u32),
                Scheme::ExpSum { base } => {
                    BigUint::from(base).pow(schema.exponent(name).expect("known label"))
                }
                Scheme::PrimeProd => BigUint::from(schema.prime(name).expect("known label")),
            };
            // complement entry times object entry, summed
            dot += &code * &code;
            if first_hit.is_none() {
                first_hit = Some(name.to_string());
            }
        }
    }
    Ok((dot, first_hit))
}

pub fn complement_dot(
    schema: &PolicySchema,
    subject: &Token,
    object: &Token,
) -> Result<DominanceVerdict> {
    let (dot, witness) = complement_dot_value(schema, subject, object)?;
    match witness {
        None => {
            debug_assert!(dot.is_zero());
            Ok(DominanceVerdict::allow())
        }
        Some(w) => Ok(DominanceVerdict::deny(w)),
    }
}

/// Expsum route: extract both descending index sequences by repeated
/// floor-log/subtract and walk them together. The object loses as soon
/// as it holds an index the subject walked past.
pub fn expsum_walk(
    schema: &PolicySchema,
    subject: &Token,
    object: &Token,
) -> Result<DominanceVerdict> {
    check_pair(schema, subject, object)?;
    let Scheme::ExpSum { base } = subject.scheme() else {
        return Err(Error::SchemeMismatch(format!(
            "expsum test got {} tokens",
            subject.scheme().tag()
        )));
    };
    let subject_indices = codec::decode_indices(subject.value(), base)?;
    let object_indices = codec::decode_indices(object.value(), base)?;
    let mut pos = 0usize;
    'object: for &needed in &object_indices {
        while pos < subject_indices.len() {
            let have = subject_indices[pos];
            pos += 1;
            if have == needed {
                continue 'object;
            }
            if have < needed {
                // Both sequences descend, so `needed` can no longer appear.
                return Ok(deny_exponent(schema, needed));
            }
        }
        return Ok(deny_exponent(schema, needed));
    }
    Ok(DominanceVerdict::allow())
}

fn deny_exponent(schema: &PolicySchema, index: u32) -> DominanceVerdict {
    let label = schema
        .label_for_exponent(index)
        .expect("token indices map to labels");
    DominanceVerdict::deny(label)
}

/// Prime-product route: dominance holds when the object's product divides
/// the subject's, one modulo for the whole question.
pub fn prime_modulo(
    schema: &PolicySchema,
    subject: &Token,
    object: &Token,
) -> Result<DominanceVerdict> {
    check_pair(schema, subject, object)?;
    if subject.scheme() != Scheme::PrimeProd {
        return Err(Error::SchemeMismatch(format!(
            "prime-modulo test got {} tokens",
            subject.scheme().tag()
        )));
    }
    if object.value().is_zero() {
        return Err(Error::ZeroObjectValue);
    }
    if (subject.value() % object.value()).is_zero() {
        return Ok(DominanceVerdict::allow());
    }
    // Name the first schema prime dividing the object but not the subject.
    for name in schema.label_order() {
        let p = BigUint::from(schema.prime(name).expect("known label"));
        if (object.value() % &p).is_zero() && !(subject.value() % &p).is_zero() {
            return Ok(DominanceVerdict::deny(name));
        }
    }
    unreachable!("nonzero remainder implies a missing prime factor")
}

/// Dispatch to a token pair's native route: mask comparison for bitvec,
/// merge walk for expsum, a single modulo for primeprod.
pub fn decide(schema: &PolicySchema, subject: &Token, object: &Token) -> Result<DominanceVerdict> {
    match subject.scheme() {
        Scheme::BitVec => bitvec_and(schema, subject, object),
        Scheme::ExpSum { .. } => expsum_walk(schema, subject, object),
        Scheme::PrimeProd => prime_modulo(schema, subject, object),
    }
}

/// Every route run on one (subject, object) label pair.
#[derive(Debug, Clone)]
pub struct CrossCheck {
    /// The oracle's verdict; the reference answer.
    pub verdict: DominanceVerdict,
    /// (route name, holds) for every route, oracle included.
    pub results: Vec<(String, bool)>,
    /// True when any route differs from the oracle. Always a defect.
    pub disagreement: bool,
}

/// Encode the pair under all three schemes and run all four token routes
/// plus the oracle. Routes may disagree only on the witness label, never
/// on the verdict; a verdict split is reported, not papered over.
pub fn cross_check(
    schema: &PolicySchema,
    subject_included: &NameSet,
    object: &NameSet,
) -> Result<CrossCheck> {
    let verdict = subset_oracle(subject_included, object);
    let mut results = vec![("oracle".to_string(), verdict.holds())];

    let subject_names: Vec<&str> = subject_included.iter().map(String::as_str).collect();
    let object_names: Vec<&str> = object.iter().map(String::as_str).collect();
    for scheme in [
        Scheme::BitVec,
        Scheme::expsum_of(schema),
        Scheme::PrimeProd,
    ] {
        let s = codec::encode(schema, scheme, subject_names.iter().copied())?;
        let o = codec::encode(schema, scheme, object_names.iter().copied())?;
        let native = match scheme {
            Scheme::BitVec => ("bitvec-and", bitvec_and(schema, &s, &o)?),
            Scheme::ExpSum { .. } => ("expsum-walk", expsum_walk(schema, &s, &o)?),
            Scheme::PrimeProd => ("prime-modulo", prime_modulo(schema, &s, &o)?),
        };
        results.push((native.0.to_string(), native.1.holds()));
        let dot = complement_dot(schema, &s, &o)?;
        results.push((format!("complement-dot/{}", scheme.name()), dot.holds()));
    }

    let reference = verdict.holds();
    let disagreement = results.iter().any(|(_, h)| *h != reference);
    Ok(CrossCheck {
        verdict,
        results,
        disagreement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::LabelSet;

    fn mi_schema() -> PolicySchema {
        PolicySchema::build("mi-universe")
            .levels(["TopSecret", "Secret", "Protected", "Public"])
            .compartments(["GCHQ", "MI5", "MI6"])
            .finish()
    }

    fn names(items: &[&str]) -> NameSet {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn user_included(schema: &PolicySchema) -> NameSet {
        schema
            .expand_subject(&LabelSet::of(Some("Secret"), &["MI5", "MI6"]))
            .unwrap()
            .included()
            .clone()
    }

    fn pair(schema: &PolicySchema, scheme: Scheme, subject: &NameSet, object: &[&str]) -> (Token, Token) {
        let s = codec::encode(schema, scheme, subject.iter().map(String::as_str)).unwrap();
        let o = codec::encode(schema, scheme, object.iter().copied()).unwrap();
        (s, o)
    }

    #[test]
    fn oracle_accepts_contained_object_and_names_least_witness() {
        let schema = mi_schema();
        let inc = user_included(&schema);
        assert!(subset_oracle(&inc, &names(&["Secret", "MI5"])).holds());
        let verdict = subset_oracle(&inc, &names(&["Secret", "GCHQ", "MI6"]));
        assert!(!verdict.holds());
        assert_eq!(verdict.witness(), Some("GCHQ"));
        // the empty object is below everything
        assert!(subset_oracle(&names(&[]), &names(&[])).holds());
    }

    #[test]
    fn bitvec_route_matches_mask_comparison() {
        let schema = mi_schema();
        let inc = user_included(&schema);
        let (s, o1) = pair(&schema, Scheme::BitVec, &inc, &["Secret", "MI5"]);
        assert!(bitvec_and(&schema, &s, &o1).unwrap().holds());
        let (_, o2) = pair(&schema, Scheme::BitVec, &inc, &["Secret", "GCHQ", "MI6"]);
        let verdict = bitvec_and(&schema, &s, &o2).unwrap();
        assert_eq!(verdict.witness(), Some("GCHQ"));
    }

    #[test]
    fn expsum_walk_follows_the_worked_pair() {
        let schema = mi_schema();
        let inc = user_included(&schema);
        let scheme = Scheme::expsum_of(&schema);
        let (s, o1) = pair(&schema, scheme, &inc, &["Secret", "MI5"]);
        assert_eq!(s.value(), &BigUint::from(1011u32));
        assert_eq!(o1.value(), &BigUint::from(246u32));
        assert!(expsum_walk(&schema, &s, &o1).unwrap().holds());

        let (_, o2) = pair(&schema, scheme, &inc, &["Secret", "GCHQ", "MI6"]);
        assert_eq!(o2.value(), &BigUint::from(813u32));
        let verdict = expsum_walk(&schema, &s, &o2).unwrap();
        assert!(!verdict.holds());
        assert_eq!(verdict.witness(), Some("GCHQ"));
    }

    #[test]
    fn prime_modulo_follows_the_worked_pair() {
        let schema = mi_schema();
        let inc = user_included(&schema);
        let (s, o1) = pair(&schema, Scheme::PrimeProd, &inc, &["Secret", "MI5"]);
        assert_eq!(s.value(), &BigUint::from(124_355u32));
        assert_eq!(o1.value(), &BigUint::from(85u32));
        assert!(prime_modulo(&schema, &s, &o1).unwrap().holds());

        let (_, o2) = pair(&schema, Scheme::PrimeProd, &inc, &["Secret", "GCHQ", "MI6"]);
        // full encoding of the object, every mark's prime included
        assert_eq!(o2.value(), &BigUint::from(1235u32));
        assert_eq!(s.value() % o2.value(), BigUint::from(855u32));
        let verdict = prime_modulo(&schema, &s, &o2).unwrap();
        assert_eq!(verdict.witness(), Some("GCHQ"));
    }

    #[test]
    fn complement_dot_sums_squared_codes_of_encroachments() {
        let schema = mi_schema();
        let inc = user_included(&schema);
        let object = ["Secret", "GCHQ", "MI6"];

        let (s, o) = pair(&schema, Scheme::expsum_of(&schema), &inc, &object);
        let (dot, _) = complement_dot_value(&schema, &s, &o).unwrap();
        assert_eq!(dot, BigUint::from(6561u32)); // 3^8, GCHQ squared

        let (s, o) = pair(&schema, Scheme::PrimeProd, &inc, &object);
        let (dot, witness) = complement_dot_value(&schema, &s, &o).unwrap();
        assert_eq!(dot, BigUint::from(169u32)); // 13 squared
        assert_eq!(witness.as_deref(), Some("GCHQ"));

        let (s, o) = pair(&schema, Scheme::BitVec, &inc, &object);
        let (dot, _) = complement_dot_value(&schema, &s, &o).unwrap();
        assert_eq!(dot, BigUint::from(1u32));

        let (s, o) = pair(&schema, Scheme::PrimeProd, &inc, &["Secret", "MI5"]);
        let (dot, witness) = complement_dot_value(&schema, &s, &o).unwrap();
        assert!(dot.is_zero());
        assert!(witness.is_none());
    }

    #[test]
    fn routes_reject_mixed_schemes_and_foreign_schemas() {
        let schema = mi_schema();
        let inc = user_included(&schema);
        let (s_bits, _) = pair(&schema, Scheme::BitVec, &inc, &[]);
        let (s_prime, o_prime) = pair(&schema, Scheme::PrimeProd, &inc, &["Secret"]);
        assert!(matches!(
            bitvec_and(&schema, &s_bits, &o_prime),
            Err(Error::SchemeMismatch(_))
        ));
        assert!(matches!(
            bitvec_and(&schema, &s_prime, &o_prime),
            Err(Error::SchemeMismatch(_))
        ));
        assert!(matches!(
            expsum_walk(&schema, &s_prime, &o_prime),
            Err(Error::SchemeMismatch(_))
        ));

        let other = PolicySchema::build("other")
            .levels(["TopSecret", "Secret", "Protected", "Public"])
            .compartments(["GCHQ", "MI5", "MI6"])
            .finish();
        let foreign = codec::encode(&other, Scheme::PrimeProd, ["Secret"]).unwrap();
        assert!(matches!(
            prime_modulo(&schema, &s_prime, &foreign),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn dominance_is_reflexive_and_transitive_on_chains() {
        let schema = mi_schema();
        let low = names(&["Public"]);
        let mid = names(&["Public", "Protected", "MI5"]);
        let high = names(&["Public", "Protected", "Secret", "MI5", "MI6"]);
        for set in [&low, &mid, &high] {
            assert!(subset_oracle(set, set).holds());
        }
        assert!(subset_oracle(&mid, &low).holds());
        assert!(subset_oracle(&high, &mid).holds());
        assert!(subset_oracle(&high, &low).holds());
        assert!(!subset_oracle(&low, &mid).holds());

        // the arithmetic routes agree along the same chain
        let encode = |set: &NameSet| {
            codec::encode(
                &schema,
                Scheme::PrimeProd,
                set.iter().map(String::as_str),
            )
            .unwrap()
        };
        let (t_low, t_mid, t_high) = (encode(&low), encode(&mid), encode(&high));
        assert!(prime_modulo(&schema, &t_mid, &t_low).unwrap().holds());
        assert!(prime_modulo(&schema, &t_high, &t_mid).unwrap().holds());
        assert!(prime_modulo(&schema, &t_high, &t_low).unwrap().holds());
        assert!(!prime_modulo(&schema, &t_low, &t_high).unwrap().holds());
    }

    #[test]
    fn forged_all_ones_bitvec_dominates_every_object() {
        let schema = mi_schema();
        let forged = codec::universe_token(&schema, Scheme::BitVec).unwrap();
        assert_eq!(forged.value(), &BigUint::from(127u32));
        let labels: Vec<&str> = schema.label_order().collect();
        for mask in 0u32..128 {
            let subset: Vec<&str> = labels
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, n)| *n)
                .collect();
            let object = codec::encode(&schema, Scheme::BitVec, subset).unwrap();
            assert!(bitvec_and(&schema, &forged, &object).unwrap().holds());
        }
    }

    #[test]
    fn forged_full_product_dominates_every_object() {
        let schema = mi_schema();
        let forged = codec::universe_token(&schema, Scheme::PrimeProd).unwrap();
        let labels: Vec<&str> = schema.label_order().collect();
        for mask in 0u32..128 {
            let subset: Vec<&str> = labels
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, n)| *n)
                .collect();
            let object = codec::encode(&schema, Scheme::PrimeProd, subset).unwrap();
            assert!(prime_modulo(&schema, &forged, &object).unwrap().holds());
        }
    }

    #[test]
    fn cross_check_is_unanimous_on_the_worked_pairs() {
        let schema = mi_schema();
        let inc = user_included(&schema);
        let allow = cross_check(&schema, &inc, &names(&["Secret", "MI5"])).unwrap();
        assert!(allow.verdict.holds());
        assert!(!allow.disagreement);
        assert_eq!(allow.results.len(), 7);

        let deny = cross_check(&schema, &inc, &names(&["Secret", "GCHQ", "MI6"])).unwrap();
        assert!(!deny.verdict.holds());
        assert!(!deny.disagreement);
        assert_eq!(deny.verdict.witness(), Some("GCHQ"));
    }
}
