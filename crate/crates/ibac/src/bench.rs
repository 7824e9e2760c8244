//! Microbenchmark comparing the two one-shot dominance operations: the
//! bitvec AND-and-compare against the prime-product modulo.
//!
//! Operands are fixed ten-label words rather than schema tokens so the
//! measurement isolates the arithmetic itself. Before any timing starts
//! every route is checked against a subset oracle over the operand's
//! positions or factors; a benchmark that times a wrong answer measures
//! nothing, so a verdict mismatch aborts the run.
//!
//! Wall-clock numbers vary with the host. The stable signal is the ratio
//! between the two columns, which is why rows carry it explicitly.

use std::hint::black_box;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};

/// One subject/object operand pair, given as a bit word per side plus a
/// prime factor list per side.
#[derive(Debug, Clone)]
pub struct BenchPair {
    pub name: String,
    pub subject_bits: BigUint,
    pub object_bits: BigUint,
    pub subject_primes: Vec<u64>,
    pub object_primes: Vec<u64>,
}

impl BenchPair {
    pub fn new(
        name: &str,
        subject_bits: u64,
        object_bits: u64,
        subject_primes: &[u64],
        object_primes: &[u64],
    ) -> Self {
        BenchPair {
            name: name.to_string(),
            subject_bits: BigUint::from(subject_bits),
            object_bits: BigUint::from(object_bits),
            subject_primes: subject_primes.to_vec(),
            object_primes: object_primes.to_vec(),
        }
    }

    /// Subset oracle on bit positions.
    fn bits_hold(&self) -> bool {
        (0..self.object_bits.bits())
            .filter(|i| self.object_bits.bit(*i))
            .all(|i| self.subject_bits.bit(i))
    }

    /// Subset oracle on prime factors.
    fn primes_hold(&self) -> bool {
        self.object_primes
            .iter()
            .all(|p| self.subject_primes.contains(p))
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Dominance checks per timed sample; zeroes are dropped.
    pub counts: Vec<u64>,
    /// Timed samples per count; the row keeps the median.
    pub repetitions: u32,
    pub pairs: Vec<BenchPair>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        // A ten-label word with most labels present on both sides, and a
        // sparse object against the same subject. The dense pair fails
        // dominance in both schemes, the sparse pair holds in both.
        let subject_primes = [2, 5, 7, 11, 13, 17, 19, 23, 31, 61];
        BenchConfig {
            counts: vec![1_000, 10_000, 100_000, 1_000_000],
            repetitions: 5,
            pairs: vec![
                BenchPair::new(
                    "dense",
                    0b10_1111_1111,
                    0b11_1011_1111,
                    &subject_primes,
                    &[2, 3, 5, 13, 17, 19, 23, 31, 37, 61],
                ),
                BenchPair::new(
                    "sparse",
                    0b10_1111_1111,
                    0b10_0000_0001,
                    &subject_primes,
                    &[2, 61],
                ),
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub reads: u64,
    pub and_seconds: f64,
    pub modulo_seconds: f64,
    /// modulo time as a percentage of AND time
    pub ratio_percent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub name: String,
    /// The (oracle-confirmed) verdict both routes produced.
    pub holds: bool,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub pairs: Vec<PairReport>,
}

fn product(primes: &[u64]) -> BigUint {
    primes.iter().map(|p| BigUint::from(*p)).product()
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2.0
    }
}

fn time_loop(count: u64, mut op: impl FnMut() -> bool) -> f64 {
    let start = Instant::now();
    for _ in 0..count {
        black_box(op());
    }
    start.elapsed().as_secs_f64()
}

pub fn run(config: &BenchConfig) -> Result<BenchReport> {
    let repetitions = config.repetitions.max(1);
    let mut pairs = Vec::new();
    for pair in &config.pairs {
        let expected = pair.bits_hold();
        if expected != pair.primes_hold() {
            // the two schemes describe different label sets; the
            // comparison would be apples to oranges
            return Err(Error::BenchVerdict(pair.name.clone()));
        }
        let (sb, ob) = (pair.subject_bits.clone(), pair.object_bits.clone());
        let (sp, op) = (product(&pair.subject_primes), product(&pair.object_primes));
        let and_op = || &(black_box(&sb) & black_box(&ob)) == black_box(&ob);
        let modulo_op = || (black_box(&sp) % black_box(&op)).is_zero();
        if and_op() != expected || modulo_op() != expected {
            return Err(Error::BenchVerdict(pair.name.clone()));
        }

        let mut rows = Vec::new();
        for &count in config.counts.iter().filter(|c| **c > 0) {
            let warmup = count.min(10_000);
            time_loop(warmup, and_op);
            time_loop(warmup, modulo_op);
            let mut and_samples = Vec::with_capacity(repetitions as usize);
            let mut modulo_samples = Vec::with_capacity(repetitions as usize);
            for _ in 0..repetitions {
                and_samples.push(time_loop(count, and_op));
                modulo_samples.push(time_loop(count, modulo_op));
            }
            let and_seconds = median(&mut and_samples);
            let modulo_seconds = median(&mut modulo_samples);
            rows.push(BenchRow {
                reads: count,
                and_seconds,
                modulo_seconds,
                ratio_percent: 100.0 * modulo_seconds / and_seconds,
            });
        }
        pairs.push(PairReport {
            name: pair.name.clone(),
            holds: expected,
            rows,
        });
    }
    Ok(BenchReport { pairs })
}
