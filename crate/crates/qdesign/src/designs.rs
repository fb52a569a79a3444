//! Incidence structures from polynomial image sets and exact t-design
//! verification by pair counting.
//!
//! Blocks are image sets {f(x) + bx + c} over GF(q). The structure built
//! here is simple by construction: duplicate blocks are collapsed and the
//! number of (b, c) pairs producing each block is kept in a multiplicity
//! ledger so block-count claims stay checkable.

use std::collections::BTreeMap;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bitset::{members_of, words_for, BitBlock};
use crate::field::{Elem, FieldCtx};

/// Largest point count for which blocks are materialized as bitsets.
pub const MAX_STRUCTURE_V: u32 = 4096;
/// Exact verification refuses beyond this many counter increments.
pub const EXACT_INCREMENT_BUDGET: u128 = 20_000_000_000;
/// Default sample count when exact mode is refused.
pub const DEFAULT_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DesignError {
    #[error("no (b, c) pair attains a block of size {0}")]
    EmptyBlockSet(u32),
    #[error("block size {0} outside 2..=q")]
    InvalidBlockSize(u32),
    #[error("point count {0} exceeds the materialization limit {MAX_STRUCTURE_V}")]
    StructureTooLarge(u32),
    #[error("t={0} exceeds the block size {1}")]
    SubsetTooLarge(u32, u32),
    #[error("t={0} unsupported (t=2 any v; t=3 only for v <= 64)")]
    UnsupportedT(u32),
    #[error("coverage counter overflowed")]
    CounterOverflow,
    #[error("exact budget exceeded: {0} increments > {EXACT_INCREMENT_BUDGET}")]
    BudgetExceeded(u128),
}

/// A subset of field points in canonical strictly-sorted form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    members: Vec<u32>,
}

impl Block {
    pub fn new(mut members: Vec<u32>) -> Self {
        members.sort_unstable();
        members.dedup();
        Block { members }
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: u32) -> bool {
        self.members.binary_search(&p).is_ok()
    }

    pub fn to_bits(&self, v: u32) -> BitBlock {
        let mut b = BitBlock::empty(v);
        for &m in &self.members {
            b.insert(m);
        }
        b
    }
}

/// The image set {f(x) + bx + c : x in GF(q)} in canonical form.
/// `f` is the point map, f[x.0] = f(x).
pub fn block_of(ctx: &FieldCtx, f: &[Elem], slope: Elem, shift: Elem) -> Block {
    let mut bits = BitBlock::empty(ctx.q());
    for x in ctx.elements() {
        let val = ctx.add(ctx.add(f[x.0 as usize], ctx.mul(slope, x)), shift);
        bits.insert(val.0);
    }
    Block {
        members: bits.members(),
    }
}

/// The multiset of block sizes |B_{(f,b,c)}| over all (b, c) in GF(q)^2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Spectrum {
    pub counts: BTreeMap<u32, u64>,
}

impl Spectrum {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Full value spectrum. Exploits that translating by c never changes the
/// block size, but reports counts as if all q^2 pairs were enumerated.
pub fn value_spectrum(ctx: &FieldCtx, f: &[Elem]) -> Spectrum {
    let q = ctx.q() as u64;
    let mut counts = BTreeMap::new();
    for slope in ctx.elements() {
        let size = block_of(ctx, f, slope, ctx.zero()).len() as u32;
        *counts.entry(size).or_insert(0u64) += q;
    }
    Spectrum { counts }
}

/// Deduplicated collection of the size-k blocks over all (b, c) pairs.
#[derive(Debug, Clone)]
pub struct IncidenceStructure {
    v: u32,
    k: u32,
    words: usize,
    /// concatenated block bitsets, `words` words each, insertion order
    bits: Vec<u64>,
    multiplicity: Vec<u32>,
    /// (b=0, c) pairs that passed the size filter; surfaced, never hidden
    zero_slope_pairs: u32,
}

impl IncidenceStructure {
    /// Builds a structure directly from explicit blocks (every member < v).
    pub fn from_blocks(v: u32, blocks: &[Block]) -> Result<Self, DesignError> {
        if v > MAX_STRUCTURE_V {
            return Err(DesignError::StructureTooLarge(v));
        }
        let k = blocks.first().map(|b| b.len() as u32).unwrap_or(0);
        let mut s = IncidenceStructure {
            v,
            k,
            words: words_for(v),
            bits: Vec::new(),
            multiplicity: Vec::new(),
            zero_slope_pairs: 0,
        };
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for b in blocks {
            assert!(b.members().iter().all(|&m| m < v));
            assert_eq!(b.len() as u32, k, "blocks must share one size");
            s.push_dedup(&mut seen, b.to_bits(v).words().to_vec(), false);
        }
        Ok(s)
    }

    fn push_dedup(
        &mut self,
        seen: &mut HashMap<Vec<u64>, usize>,
        words: Vec<u64>,
        zero_slope: bool,
    ) {
        if zero_slope {
            self.zero_slope_pairs += 1;
        }
        match seen.get(&words) {
            Some(&i) => self.multiplicity[i] += 1,
            None => {
                let i = self.multiplicity.len();
                self.bits.extend_from_slice(&words);
                self.multiplicity.push(1);
                seen.insert(words, i);
            }
        }
    }

    pub fn v(&self) -> u32 {
        self.v
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn num_blocks(&self) -> usize {
        self.multiplicity.len()
    }

    pub fn multiplicity(&self) -> &[u32] {
        &self.multiplicity
    }

    pub fn zero_slope_pairs(&self) -> u32 {
        self.zero_slope_pairs
    }

    pub fn block_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn block(&self, i: usize) -> Block {
        Block {
            members: members_of(self.block_words(i)),
        }
    }

    pub fn block_contains(&self, i: usize, p: u32) -> bool {
        self.block_words(i)[(p >> 6) as usize] >> (p & 63) & 1 == 1
    }
}

/// Collects all blocks of size exactly k over (b, c) in GF(q)^2.
pub fn build_structure(
    ctx: &FieldCtx,
    f: &[Elem],
    k: u32,
) -> Result<IncidenceStructure, DesignError> {
    let q = ctx.q();
    if k < 2 || k > q {
        return Err(DesignError::InvalidBlockSize(k));
    }
    if q > MAX_STRUCTURE_V {
        return Err(DesignError::StructureTooLarge(q));
    }
    let mut s = IncidenceStructure {
        v: q,
        k,
        words: words_for(q),
        bits: Vec::new(),
        multiplicity: Vec::new(),
        zero_slope_pairs: 0,
    };
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for slope in ctx.elements() {
        let base = block_of(ctx, f, slope, ctx.zero());
        // |B_(f,b,c)| = |B_(f,b,0)|: translation by c is a bijection
        if base.len() as u32 != k {
            continue;
        }
        for shift in ctx.elements() {
            let mut bits = BitBlock::empty(q);
            for &m in base.members() {
                bits.insert(ctx.add(Elem(m), shift).0);
            }
            s.push_dedup(&mut seen, bits.words().to_vec(), slope.0 == 0);
        }
    }
    if s.num_blocks() == 0 {
        return Err(DesignError::EmptyBlockSet(k));
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Exact,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub subset: Vec<u32>,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DesignReport {
    pub schema_version: u32,
    pub t: u32,
    pub v: u32,
    pub k: u32,
    pub lambda: Option<u64>,
    pub b: u64,
    pub is_design: bool,
    pub mode: String,
    pub seed: Option<u64>,
    pub counterexample: Option<Counterexample>,
}

fn binom(n: u64, k: u32) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k as u64 {
        acc = acc * (n - i) as u128 / (i as u128 + 1);
    }
    acc
}

/// Total counter increments exact verification of this structure costs.
pub fn increment_budget(s: &IncidenceStructure, t: u32) -> u128 {
    s.num_blocks() as u128 * binom(s.k() as u64, t)
}

/// Exact or sampled t-design verification. Exact mode counts, for every
/// t-subset of points, the number of containing blocks; the structure is a
/// design iff all counts agree. Sampled mode can only fail to falsify.
pub fn verify_t_design(
    s: &IncidenceStructure,
    t: u32,
    mode: VerifyMode,
) -> Result<DesignReport, DesignError> {
    if t > s.k() {
        return Err(DesignError::SubsetTooLarge(t, s.k()));
    }
    match mode {
        VerifyMode::Exact => verify_exact(s, t),
        VerifyMode::Sampled { samples, seed } => verify_sampled(s, t, samples, seed),
    }
}

fn verify_exact(s: &IncidenceStructure, t: u32) -> Result<DesignReport, DesignError> {
    let counters = match t {
        2 => count_pairs(s),
        3 if s.v() <= 64 => count_triples(s),
        _ => return Err(DesignError::UnsupportedT(t)),
    };
    // overflow detection: the grand total must match the increment count
    let total: u128 = counters.iter().map(|&c| c as u128).sum();
    if total != increment_budget(s, t) {
        return Err(DesignError::CounterOverflow);
    }
    let first = counters[0];
    let uniform = counters.iter().all(|&c| c == first);
    let b = s.num_blocks() as u64;
    let mut report = DesignReport {
        schema_version: 1,
        t,
        v: s.v(),
        k: s.k(),
        lambda: None,
        b,
        is_design: uniform,
        mode: "exact".into(),
        seed: None,
        counterexample: None,
    };
    if uniform {
        report.lambda = Some(first as u64);
        // b * C(k,t) = lambda * C(v,t) must hold as an integer identity
        debug_assert_eq!(
            b as u128 * binom(s.k() as u64, t),
            first as u128 * binom(s.v() as u64, t)
        );
    } else {
        // report the first subset whose coverage differs from the modal count
        let modal = modal_count(&counters);
        let idx = counters.iter().position(|&c| c != modal).unwrap();
        report.counterexample = Some(Counterexample {
            subset: decode_subset(idx, t),
            count: counters[idx] as u64,
        });
    }
    Ok(report)
}

fn modal_count(counters: &[u32]) -> u32 {
    let mut freq: HashMap<u32, u64> = HashMap::new();
    for &c in counters {
        *freq.entry(c).or_insert(0) += 1;
    }
    freq.into_iter()
        .max_by_key(|&(c, n)| (n, std::cmp::Reverse(c)))
        .map(|(c, _)| c)
        .unwrap()
}

#[cfg(test)]
fn pair_index(a: u32, b: u32) -> usize {
    debug_assert!(a < b);
    (b as usize * (b as usize - 1)) / 2 + a as usize
}

fn triple_index(a: u32, b: u32, c: u32) -> usize {
    debug_assert!(a < b && b < c);
    let (b, c) = (b as usize, c as usize);
    c * (c - 1) * (c - 2) / 6 + b * (b - 1) / 2 + a as usize
}

fn decode_subset(idx: usize, t: u32) -> Vec<u32> {
    match t {
        2 => {
            let mut b = 1u32;
            let mut i = idx;
            while i >= b as usize {
                i -= b as usize;
                b += 1;
            }
            vec![i as u32, b]
        }
        3 => {
            let mut c = 2usize;
            while (c + 1) * c * (c - 1) / 6 <= idx {
                c += 1;
            }
            let rest = idx - c * (c - 1) * (c - 2) / 6;
            let mut b = 1usize;
            let mut i = rest;
            while i >= b {
                i -= b;
                b += 1;
            }
            vec![i as u32, b as u32, c as u32]
        }
        _ => unreachable!(),
    }
}

/// Data-parallel pair counting: workers fill private counter shards that
/// merge by elementwise addition, so the result is schedule-independent.
fn count_pairs(s: &IncidenceStructure) -> Vec<u32> {
    let v = s.v() as usize;
    let n_pairs = v * (v - 1) / 2;
    let n_blocks = s.num_blocks();
    let threads = rayon::current_num_threads().max(1);
    let chunk = (n_blocks / (threads * 4)).max(1);
    let indices: Vec<usize> = (0..n_blocks).collect();
    indices
        .par_chunks(chunk)
        .map(|blocks| {
            let mut shard = vec![0u32; n_pairs];
            let mut members: Vec<u32> = Vec::with_capacity(s.k() as usize);
            for &bi in blocks {
                members.clear();
                members.extend(members_of(s.block_words(bi)));
                for j in 1..members.len() {
                    let base = (members[j] as usize * (members[j] as usize - 1)) / 2;
                    for &a in &members[..j] {
                        shard[base + a as usize] += 1;
                    }
                }
            }
            shard
        })
        .reduce(
            || vec![0u32; n_pairs],
            |mut acc, shard| {
                for (a, b) in acc.iter_mut().zip(shard) {
                    *a += b;
                }
                acc
            },
        )
}

fn count_triples(s: &IncidenceStructure) -> Vec<u32> {
    let v = s.v() as usize;
    let n = v * (v - 1) * (v - 2) / 6;
    let mut counters = vec![0u32; n];
    for bi in 0..s.num_blocks() {
        let members = members_of(s.block_words(bi));
        for k in 2..members.len() {
            for j in 1..k {
                for i in 0..j {
                    counters[triple_index(members[i], members[j], members[k])] += 1;
                }
            }
        }
    }
    counters
}

fn verify_sampled(
    s: &IncidenceStructure,
    t: u32,
    samples: u64,
    seed: u64,
) -> Result<DesignReport, DesignError> {
    if !(2..=3).contains(&t) {
        return Err(DesignError::UnsupportedT(t));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<u32> = (0..s.v()).collect();
    let mut common: Option<u64> = None;
    let mut counterexample = None;
    for _ in 0..samples {
        let mut subset: Vec<u32> = points
            .choose_multiple(&mut rng, t as usize)
            .copied()
            .collect();
        subset.sort_unstable();
        let count = (0..s.num_blocks())
            .filter(|&i| subset.iter().all(|&p| s.block_contains(i, p)))
            .count() as u64;
        match common {
            None => common = Some(count),
            Some(c) if c != count => {
                counterexample = Some(Counterexample { subset, count });
                break;
            }
            _ => {}
        }
    }
    let falsified = counterexample.is_some();
    Ok(DesignReport {
        schema_version: 1,
        t,
        v: s.v(),
        k: s.k(),
        lambda: if falsified { None } else { common },
        b: s.num_blocks() as u64,
        is_design: !falsified,
        mode: "sampled".into(),
        seed: Some(seed),
        counterexample,
    })
}

/// Writes the spectrum as CSV (`size,count`, ascending by size).
pub fn spectrum_csv(spec: &Spectrum) -> String {
    let mut out = String::from("size,count\n");
    for (size, count) in &spec.counts {
        out.push_str(&format!("{},{}\n", size, count));
    }
    out
}
