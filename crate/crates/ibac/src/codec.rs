//! Three integer codecs for label sets, token maintenance and obfuscation.
//!
//! Every codec packs a set of schema labels into one unsigned integer:
//!
//! * bitvec: bit `k` is set when the label with bit position `k` is present
//! * expsum: sum of `base^k` over the exponent indices present; distinct
//!   indices make every set's sum unique regardless of the base
//! * primeprod: product of the labels' primes; the empty set encodes as 1
//!
//! Tokens print as scheme tag, colon, value: `b:0b111`, `e3:13`, `p:105`.
//! A token remembers the schema id it was encoded under and every
//! constructor (encode, parse, add, remove, deobfuscate) validates, so a
//! `Token` in hand always decodes cleanly under its schema.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::primes;
use crate::schema::{PolicySchema, SchemaId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    BitVec,
    ExpSum { base: u64 },
    PrimeProd,
}

impl Scheme {
    /// The expsum scheme bound to a schema's base.
    pub fn expsum_of(schema: &PolicySchema) -> Scheme {
        Scheme::ExpSum { base: schema.base() }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::BitVec => "bitvec",
            Scheme::ExpSum { .. } => "expsum",
            Scheme::PrimeProd => "primeprod",
        }
    }

    /// Serialized prefix: `b`, `e<base>` or `p`.
    pub fn tag(&self) -> String {
        match self {
            Scheme::BitVec => "b".to_string(),
            Scheme::ExpSum { base } => format!("e{base}"),
            Scheme::PrimeProd => "p".to_string(),
        }
    }

    pub(crate) fn parse_tag(tag: &str) -> Result<Scheme> {
        match tag {
            "b" => Ok(Scheme::BitVec),
            "p" => Ok(Scheme::PrimeProd),
            _ => {
                let digits = tag
                    .strip_prefix('e')
                    .ok_or_else(|| Error::TokenSyntax(format!("unknown scheme tag `{tag}`")))?;
                let base: u64 = digits
                    .parse()
                    .map_err(|_| Error::TokenSyntax(format!("bad expsum base in `{tag}`")))?;
                if base < 2 {
                    return Err(Error::TokenSyntax(format!(
                        "expsum base must be at least 2, got {base}"
                    )));
                }
                Ok(Scheme::ExpSum { base })
            }
        }
    }
}

// Display only the codec family; the tag carries the base where it matters.
impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One label set packed into one integer, bound to a scheme and schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    scheme: Scheme,
    value: BigUint,
    schema_id: SchemaId,
}

impl Token {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn schema_id(&self) -> &str {
        &self.schema_id
    }

    /// Parse the serialized form and validate it against the schema. The
    /// expsum base must equal the schema's, bitvec values must fit the
    /// label count, and the value must decode without residue.
    pub fn parse(text: &str, schema: &PolicySchema) -> Result<Token> {
        schema.ensure_valid()?;
        let trimmed = text.trim();
        let (tag, digits) = trimmed
            .split_once(':')
            .ok_or_else(|| Error::TokenSyntax(format!("`{trimmed}` has no scheme tag")))?;
        let scheme = Scheme::parse_tag(tag)?;
        let value = match scheme {
            Scheme::BitVec => {
                let bin = digits.strip_prefix("0b").ok_or_else(|| {
                    Error::TokenSyntax(format!("bitvec value `{digits}` must start with 0b"))
                })?;
                parse_digits(bin, 2)?
            }
            Scheme::ExpSum { base } => {
                if base != schema.base() {
                    return Err(Error::SchemeMismatch(format!(
                        "token base {base} differs from schema base {}",
                        schema.base()
                    )));
                }
                parse_digits(digits, 10)?
            }
            Scheme::PrimeProd => parse_digits(digits, 10)?,
        };
        decode_value(schema, scheme, &value)?;
        Ok(Token {
            scheme,
            value,
            schema_id: schema.id().to_string(),
        })
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.scheme {
            Scheme::BitVec => write!(f, "b:0b{:b}", self.value),
            _ => write!(f, "{}:{}", self.scheme.tag(), self.value),
        }
    }
}

fn parse_digits(digits: &str, radix: u32) -> Result<BigUint> {
    if digits.is_empty() {
        return Err(Error::TokenSyntax("empty value".to_string()));
    }
    BigUint::parse_bytes(digits.as_bytes(), radix)
        .ok_or_else(|| Error::TokenSyntax(format!("`{digits}` is not a base-{radix} integer")))
}

/// Encode a set of label names. Subject callers pass the included form,
/// object callers the written label set; the codec itself is symmetric.
pub fn encode<'a>(
    schema: &PolicySchema,
    scheme: Scheme,
    labels: impl IntoIterator<Item = &'a str>,
) -> Result<Token> {
    schema.ensure_valid()?;
    if let Scheme::ExpSum { base } = scheme {
        if base != schema.base() {
            return Err(Error::SchemeMismatch(format!(
                "expsum base {base} differs from schema base {}",
                schema.base()
            )));
        }
    }
    let mut names: BTreeSet<&str> = BTreeSet::new();
    for name in labels {
        if !schema.contains(name) {
            return Err(Error::UnknownLabel(name.to_string()));
        }
        names.insert(name);
    }
    let value = match scheme {
        Scheme::BitVec => {
            let mut v = BigUint::zero();
            for name in &names {
                v.set_bit(schema.bit(name).expect("validated label") as u64, true);
            }
            v
        }
        Scheme::ExpSum { base } => {
            let b = BigUint::from(base);
            let mut v = BigUint::zero();
            for name in &names {
                v += b.pow(schema.exponent(name).expect("validated label"));
            }
            v
        }
        Scheme::PrimeProd => {
            let mut v = BigUint::one();
            for name in &names {
                v *= BigUint::from(schema.prime(name).expect("validated label"));
            }
            v
        }
    };
    Ok(Token {
        scheme,
        value,
        schema_id: schema.id().to_string(),
    })
}

/// Token for the full label universe. Under bitvec this is the all-ones
/// value that dominates everything regardless of how it was obtained.
pub fn universe_token(schema: &PolicySchema, scheme: Scheme) -> Result<Token> {
    let names: Vec<&str> = schema.label_order().collect();
    encode(schema, scheme, names)
}

/// Decode a token back to its label names.
pub fn decode(schema: &PolicySchema, token: &Token) -> Result<BTreeSet<String>> {
    schema.ensure_valid()?;
    check_schema(schema, token)?;
    decode_value(schema, token.scheme, &token.value)
}

fn check_schema(schema: &PolicySchema, token: &Token) -> Result<()> {
    if token.schema_id != schema.id() {
        return Err(Error::SchemaMismatch {
            token: token.schema_id.clone(),
            schema: schema.id().to_string(),
        });
    }
    Ok(())
}

fn decode_value(schema: &PolicySchema, scheme: Scheme, value: &BigUint) -> Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    match scheme {
        Scheme::BitVec => {
            let n = schema.label_count() as u64;
            if value.bits() > n {
                return Err(Error::MalformedToken(format!(
                    "bit {} set but the schema has only {n} labels",
                    value.bits() - 1
                )));
            }
            for pos in 0..n {
                if value.bit(pos) {
                    let label = schema
                        .label_for_bit(pos as u32)
                        .expect("contiguous bit positions");
                    names.insert(label.to_string());
                }
            }
        }
        Scheme::ExpSum { base } => {
            let indices = decode_indices(value, base)?;
            let mut seen = BTreeSet::new();
            for idx in indices {
                if !seen.insert(idx) {
                    return Err(Error::MalformedToken(format!(
                        "exponent index {idx} extracted twice"
                    )));
                }
                match schema.label_for_exponent(idx) {
                    Some(label) => {
                        names.insert(label.to_string());
                    }
                    None => {
                        return Err(Error::MalformedToken(format!(
                            "exponent index {idx} is not assigned to any label"
                        )))
                    }
                }
            }
        }
        Scheme::PrimeProd => {
            if value.is_zero() {
                return Err(Error::MalformedToken(
                    "primeprod value 0; the empty set encodes as 1".to_string(),
                ));
            }
            let mut residue = value.clone();
            for name in schema.label_order() {
                let p = BigUint::from(schema.prime(name).expect("validated label"));
                if (&residue % &p).is_zero() {
                    residue /= &p;
                    names.insert(name.to_string());
                }
            }
            if !residue.is_one() {
                return Err(Error::MalformedToken(format!(
                    "residue {residue} after dividing out schema primes"
                )));
            }
        }
    }
    Ok(names)
}

/// Operation counts from an expsum extraction. Extraction count equals the
/// number of labels present in the value, never the universe size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecodeCost {
    pub extractions: u64,
    pub multiplications: u64,
}

/// Pull the exponent indices out of an expsum value, largest first, by
/// repeated floor-log and subtract. Repeated indices are returned as-is;
/// schema-level decode rejects them.
pub fn decode_indices(value: &BigUint, base: u64) -> Result<Vec<u32>> {
    Ok(decode_indices_counted(value, base)?.0)
}

pub fn decode_indices_counted(value: &BigUint, base: u64) -> Result<(Vec<u32>, DecodeCost)> {
    if base < 2 {
        return Err(Error::MalformedToken(format!(
            "expsum base must be at least 2, got {base}"
        )));
    }
    let mut x = value.clone();
    let mut out = Vec::new();
    let mut cost = DecodeCost::default();
    let b = BigUint::from(base);
    while !x.is_zero() {
        let e = floor_log(&x, &b, &mut cost.multiplications);
        x -= b.pow(e);
        out.push(e);
        cost.extractions += 1;
    }
    Ok((out, cost))
}

/// Greatest `e` with `base^e <= x`, for `x >= 1`. Integer arithmetic only;
/// floating-point logs misplace indices once values outgrow a double.
fn floor_log(x: &BigUint, base: &BigUint, mults: &mut u64) -> u32 {
    let mut power = base.clone();
    let mut e = 0u32;
    while power <= *x {
        power *= base;
        e += 1;
        *mults += 1;
    }
    e
}

fn presence(schema: &PolicySchema, token: &Token, name: &str) -> Result<bool> {
    match token.scheme {
        Scheme::BitVec => Ok(token.value.bit(schema.bit(name).expect("known label") as u64)),
        Scheme::ExpSum { .. } => {
            let names = decode_value(schema, token.scheme, &token.value)?;
            Ok(names.contains(name))
        }
        Scheme::PrimeProd => {
            let p = BigUint::from(schema.prime(name).expect("known label"));
            Ok((&token.value % &p).is_zero())
        }
    }
}

/// Add one label by pure integer arithmetic: set the bit, add `base^k`,
/// or multiply by the prime.
pub fn add_label(schema: &PolicySchema, token: &Token, name: &str) -> Result<Token> {
    schema.ensure_valid()?;
    check_schema(schema, token)?;
    if !schema.contains(name) {
        return Err(Error::UnknownLabel(name.to_string()));
    }
    if presence(schema, token, name)? {
        return Err(Error::LabelPresent(name.to_string()));
    }
    let value = match token.scheme {
        Scheme::BitVec => {
            let mut v = token.value.clone();
            v.set_bit(schema.bit(name).expect("known label") as u64, true);
            v
        }
        Scheme::ExpSum { base } => {
            &token.value + BigUint::from(base).pow(schema.exponent(name).expect("known label"))
        }
        Scheme::PrimeProd => &token.value * BigUint::from(schema.prime(name).expect("known label")),
    };
    Ok(Token {
        scheme: token.scheme,
        value,
        schema_id: token.schema_id.clone(),
    })
}

/// Remove one label: clear the bit, subtract `base^k`, or divide by the
/// prime. Exact inverse of [`add_label`].
pub fn remove_label(schema: &PolicySchema, token: &Token, name: &str) -> Result<Token> {
    schema.ensure_valid()?;
    check_schema(schema, token)?;
    if !schema.contains(name) {
        return Err(Error::UnknownLabel(name.to_string()));
    }
    if !presence(schema, token, name)? {
        return Err(Error::LabelAbsent(name.to_string()));
    }
    let value = match token.scheme {
        Scheme::BitVec => {
            let mut v = token.value.clone();
            v.set_bit(schema.bit(name).expect("known label") as u64, false);
            v
        }
        Scheme::ExpSum { base } => {
            &token.value - BigUint::from(base).pow(schema.exponent(name).expect("known label"))
        }
        Scheme::PrimeProd => &token.value / BigUint::from(schema.prime(name).expect("known label")),
    };
    Ok(Token {
        scheme: token.scheme,
        value,
        schema_id: token.schema_id.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// Subtract the key from the value (any scheme).
    SubtractPrime,
    /// Multiply the value by the key; deobfuscation divides exactly. An
    /// actual division on obfuscation would lose information.
    MultiplyPrime,
    /// Re-encode the exponent indices under the key as a secret base.
    /// Expsum only.
    HiddenBase,
}

impl Transform {
    pub fn name(&self) -> &'static str {
        match self {
            Transform::SubtractPrime => "subtract-prime",
            Transform::MultiplyPrime => "multiply-prime",
            Transform::HiddenBase => "hidden-base",
        }
    }
}

/// A token in transit form. `scheme` is absent when the transform hides
/// the codec parameters (hidden base).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObfuscatedToken {
    pub transform: Transform,
    pub value: BigInt,
    pub scheme: Option<Scheme>,
    pub schema_id: SchemaId,
}

fn check_arith_key(schema: &PolicySchema, key: u64) -> Result<()> {
    if !primes::is_prime(key) {
        return Err(Error::KeyNotPrime(key));
    }
    if schema.label_order().any(|n| schema.prime(n) == Some(key)) {
        return Err(Error::KeyCollides(key));
    }
    Ok(())
}

pub fn obfuscate(
    schema: &PolicySchema,
    token: &Token,
    transform: Transform,
    key: u64,
) -> Result<ObfuscatedToken> {
    schema.ensure_valid()?;
    check_schema(schema, token)?;
    let (value, scheme) = match transform {
        Transform::SubtractPrime => {
            check_arith_key(schema, key)?;
            (
                BigInt::from(token.value.clone()) - BigInt::from(key),
                Some(token.scheme),
            )
        }
        Transform::MultiplyPrime => {
            check_arith_key(schema, key)?;
            (
                BigInt::from(&token.value * BigUint::from(key)),
                Some(token.scheme),
            )
        }
        Transform::HiddenBase => {
            let Scheme::ExpSum { base } = token.scheme else {
                return Err(Error::HiddenBaseScheme);
            };
            if key < 2 {
                return Err(Error::BadKey(key));
            }
            if key == base {
                return Err(Error::KeyCollides(key));
            }
            let indices = decode_indices(&token.value, base)?;
            let kb = BigUint::from(key);
            let mut v = BigUint::zero();
            for idx in &indices {
                v += kb.pow(*idx);
            }
            (BigInt::from(v), None)
        }
    };
    Ok(ObfuscatedToken {
        transform,
        value,
        scheme,
        schema_id: token.schema_id.clone(),
    })
}

/// Invert [`obfuscate`] with the shared key. The recovered value must
/// decode cleanly under the schema; a wrong key normally surfaces here as
/// a malformed-token error rather than a silently wrong clearance.
pub fn deobfuscate(schema: &PolicySchema, obf: &ObfuscatedToken, key: u64) -> Result<Token> {
    schema.ensure_valid()?;
    if obf.schema_id != schema.id() {
        return Err(Error::SchemaMismatch {
            token: obf.schema_id.clone(),
            schema: schema.id().to_string(),
        });
    }
    let (scheme, value) = match obf.transform {
        Transform::SubtractPrime => {
            check_arith_key(schema, key)?;
            let scheme = obf.scheme.ok_or(Error::MalformedToken(
                "subtract-prime transit form lost its scheme".to_string(),
            ))?;
            let restored = &obf.value + BigInt::from(key);
            let value = restored.to_biguint().ok_or_else(|| {
                Error::MalformedToken("restored value is negative".to_string())
            })?;
            (scheme, value)
        }
        Transform::MultiplyPrime => {
            check_arith_key(schema, key)?;
            let scheme = obf.scheme.ok_or(Error::MalformedToken(
                "multiply-prime transit form lost its scheme".to_string(),
            ))?;
            let k = BigInt::from(key);
            if (&obf.value % &k) != BigInt::zero() {
                return Err(Error::KeyNotInvertible(key));
            }
            let value = (&obf.value / &k).to_biguint().ok_or_else(|| {
                Error::MalformedToken("restored value is negative".to_string())
            })?;
            (scheme, value)
        }
        Transform::HiddenBase => {
            if key < 2 {
                return Err(Error::BadKey(key));
            }
            if key == schema.base() {
                return Err(Error::KeyCollides(key));
            }
            if obf.value.sign() == Sign::Minus {
                return Err(Error::MalformedToken(
                    "hidden-base transit value is negative".to_string(),
                ));
            }
            let transit = obf.value.to_biguint().expect("sign checked");
            let indices = decode_indices(&transit, key)?;
            let b = BigUint::from(schema.base());
            let mut v = BigUint::zero();
            for idx in &indices {
                v += b.pow(*idx);
            }
            (Scheme::ExpSum { base: schema.base() }, v)
        }
    };
    decode_value(schema, scheme, &value)?;
    Ok(Token {
        scheme,
        value,
        schema_id: obf.schema_id.clone(),
    })
}

/// Width of the full-universe token under each codec.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StorageRow {
    pub scheme: &'static str,
    pub value: String,
    pub bits: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct StorageReport {
    pub schema_id: String,
    pub labels: usize,
    pub rows: Vec<StorageRow>,
}

/// Compare how many bits the densest possible token costs per codec.
/// bitvec never loses this comparison; the report shows what the
/// arithmetic codecs pay for their divisibility structure.
pub fn storage_report(schema: &PolicySchema) -> Result<StorageReport> {
    let mut rows = Vec::new();
    for scheme in [
        Scheme::BitVec,
        Scheme::expsum_of(schema),
        Scheme::PrimeProd,
    ] {
        let token = universe_token(schema, scheme)?;
        rows.push(StorageRow {
            scheme: scheme.name(),
            value: token.value.to_string(),
            bits: token.value.bits(),
        });
    }
    Ok(StorageReport {
        schema_id: schema.id().to_string(),
        labels: schema.label_count(),
        rows,
    })
}
