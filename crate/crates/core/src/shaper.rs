//! Rate-1 data shaper and its soft-in soft-out de-shaper.
//!
//! Each of the N ECC bits is repeated L times, the replicas are interleaved
//! and every group of L interleaved bits is mapped to one output bit by a
//! truth table. With `i` of the `2^L` patterns mapped to 1 and uniform ECC
//! bits the output is Bernoulli(`i / 2^L`).
//!
//! Mapper inputs are numbered by slot `k in 0..L`; a pattern index carries
//! slot `k` in bit `k`. The structured interleaver routes the k-th replica of
//! every ECC bit through its own permutation into slot `k`, so each ECC bit
//! occupies every slot exactly once.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llr::{clamp_llr, LlrFrame};
use crate::seed::{self, tag};

/// Largest supported repetition factor.
pub const MAX_L: usize = 12;

/// Truth table of the L-to-1 mapper.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTable {
    l: usize,
    table: Vec<bool>,
}

impl MappingTable {
    pub fn new(l: usize, table: Vec<bool>) -> Result<Self> {
        if l == 0 || l > MAX_L {
            return Err(Error::invalid("l", format!("{l} outside 1..={MAX_L}")));
        }
        if table.len() != 1 << l {
            return Err(Error::LengthMismatch { expected: 1 << l, actual: table.len() });
        }
        Ok(MappingTable { l, table })
    }

    /// Maps the `ones` largest pattern indices to 1: `x = 1` iff the input,
    /// read as a binary number with slot `L-1` most significant, is at least
    /// `2^L - ones`. For L = 1 and one 1 this is the identity.
    pub fn comparator(l: usize, ones: usize) -> Result<Self> {
        if l == 0 || l > MAX_L {
            return Err(Error::invalid("l", format!("{l} outside 1..={MAX_L}")));
        }
        if ones > 1 << l {
            return Err(Error::invalid("ones", format!("{ones} exceeds 2^{l}")));
        }
        let table = (0..1usize << l).map(|p| p >= (1 << l) - ones).collect();
        MappingTable::new(l, table)
    }

    /// Reference table for `ones` of `2^L` patterns: Mapping A or B for
    /// L = 4 and 5 or 3 ones, otherwise [`MappingTable::comparator`].
    pub fn for_bias(l: usize, ones: usize) -> Result<Self> {
        match (l, ones) {
            (4, 5) => Ok(MappingTable::mapping_a()),
            (4, 3) => Ok(MappingTable::mapping_b()),
            _ => MappingTable::comparator(l, ones),
        }
    }

    /// L = 4, q = 5/16: patterns 0101, 1010, 1101, 1110, 1111 (slot 3
    /// first) map to 1. Mapping B plus one complementary pair.
    pub fn mapping_a() -> Self {
        MappingTable::from_bit_string("0000010000100111").expect("valid")
    }

    /// L = 4, q = 3/16: patterns 1101, 1110, 1111 (slot 3 first) map to 1.
    pub fn mapping_b() -> Self {
        MappingTable::from_bit_string("0000000000000111").expect("valid")
    }

    /// 3-to-1 map `x = c1 · c2`; slot 2 carries no information about `x`.
    pub fn first_two_product() -> Self {
        let table = (0..8).map(|p| p & 0b011 == 0b011).collect();
        MappingTable::new(3, table).expect("valid")
    }

    /// L = 1 pass-through.
    pub fn identity() -> Self {
        MappingTable::new(1, vec![false, true]).expect("valid")
    }

    pub fn l(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn output(&self, pattern: usize) -> bool {
        self.table[pattern]
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn ones_count(&self) -> usize {
        self.table.iter().filter(|&&b| b).count()
    }

    /// Output bias under uniform inputs.
    pub fn q(&self) -> f64 {
        self.ones_count() as f64 / self.table.len() as f64
    }

    /// `I(x; c_k)` in bits for every slot under uniform inputs.
    pub fn slot_information(&self) -> Vec<f64> {
        let half = (1usize << self.l) as f64 / 2.0;
        let h = crate::numerics::binary_entropy;
        (0..self.l)
            .map(|k| {
                let ones_with = |v: usize| {
                    (0..self.table.len())
                        .filter(|p| (p >> k) & 1 == v && self.table[*p])
                        .count() as f64
                };
                let p1 = ones_with(1) / half;
                let p0 = ones_with(0) / half;
                (h(self.q()) - 0.5 * (h(p0) + h(p1))).max(0.0)
            })
            .collect()
    }

    /// `0`/`1` characters in pattern-index order.
    pub fn to_bit_string(&self) -> String {
        self.table.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(s: &str) -> Result<Self> {
        let table: Vec<bool> = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse { what: "mapping table", reason: format!("bad character {other:?}") }),
            })
            .collect::<Result<_>>()?;
        let len = table.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::Parse { what: "mapping table", reason: format!("length {len} is not 2^L") });
        }
        MappingTable::new(len.trailing_zeros() as usize, table)
    }

    /// Extrinsic LLR of every input given the output LLR `channel` and input
    /// priors. Exact marginalisation over all `2^L` patterns.
    ///
    /// `weights` is scratch space of length `2^L`.
    pub fn extrinsic_into(&self, channel: f64, priors: &[f64], weights: &mut [f64], out: &mut [f64]) {
        let l = self.l;
        debug_assert_eq!(priors.len(), l);
        let lx = clamp_llr(channel);
        // w[p] = (1 - x_p) L(x) + sum_{k: bit k of p is 0} La_k
        let base: f64 = priors.iter().map(|&a| clamp_llr(a)).sum();
        let mut wmax = f64::NEG_INFINITY;
        for (p, w) in weights.iter_mut().enumerate().take(1 << l) {
            let mut v = base;
            let mut bits = p;
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                v -= clamp_llr(priors[k]);
                bits &= bits - 1;
            }
            if !self.table[p] {
                v += lx;
            }
            *w = v;
            wmax = wmax.max(v);
        }
        for w in weights.iter_mut().take(1 << l) {
            *w = (*w - wmax).exp();
        }
        for k in 0..l {
            let mut num = 0.0;
            let mut den = 0.0;
            for (p, &e) in weights.iter().enumerate().take(1 << l) {
                if (p >> k) & 1 == 0 {
                    num += e;
                } else {
                    den += e;
                }
            }
            out[k] = clamp_llr(num.ln() - den.ln() - clamp_llr(priors[k]));
        }
    }
}

/// Mapping-node update: extrinsic LLRs for the L mapper inputs.
pub fn mapping_node_update(channel_llr: f64, priors: &[f64], table: &MappingTable) -> Vec<f64> {
    assert_eq!(priors.len(), table.l(), "one prior per mapper input");
    let mut weights = vec![0.0; 1 << table.l()];
    let mut out = vec![0.0; table.l()];
    table.extrinsic_into(channel_llr, priors, &mut weights, &mut out);
    out
}

/// Variable-node update of the repetition constraint.
///
/// Returns the extrinsic toward each mapper (ECC prior plus all other mapper
/// priors) and the output toward the ECC decoder (sum of mapper priors).
pub fn variable_node_update(prior_from_ecc: f64, priors_from_mappers: &[f64]) -> (Vec<f64>, f64) {
    let from_ecc = clamp_llr(prior_from_ecc);
    let mapped: Vec<f64> = priors_from_mappers.iter().map(|&a| clamp_llr(a)).collect();
    let sum: f64 = mapped.iter().sum();
    let total = from_ecc + sum;
    let toward_mappers = mapped.iter().map(|&a| clamp_llr(total - a)).collect();
    (toward_mappers, clamp_llr(sum))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InterleaverKind {
    /// One sub-permutation per mapper slot.
    #[default]
    Structured,
    /// A single permutation of all `N·L` replicas.
    Random,
}

/// A built shaper: mapping table plus the replica routing.
#[derive(Debug, Clone, PartialEq)]
pub struct ShaperSpec {
    mapping: MappingTable,
    n: usize,
    interleaver: InterleaverKind,
    seed: u64,
    /// Flat slot `j·L + k` (mapper j, input k) -> ECC bit index.
    slot_source: Vec<u32>,
    /// ECC bit `i`, replica `r` at `i·L + r` -> flat slot position.
    bit_slots: Vec<u32>,
}

impl ShaperSpec {
    pub fn new(mapping: MappingTable, n: usize, interleaver: InterleaverKind, rng_seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n_out", "shaped length must be positive"));
        }
        let l = mapping.l();
        let mut slot_source = vec![0u32; n * l];
        match interleaver {
            InterleaverKind::Structured => {
                for k in 0..l {
                    let perm = permutation(n, seed::derive(rng_seed, &[tag::INTERLEAVER, k as u64]));
                    for (j, &bit) in perm.iter().enumerate() {
                        slot_source[j * l + k] = bit;
                    }
                }
            }
            InterleaverKind::Random => {
                let perm = permutation(n * l, seed::derive(rng_seed, &[tag::INTERLEAVER]));
                for (replica, &pos) in perm.iter().enumerate() {
                    slot_source[pos as usize] = (replica / l) as u32;
                }
            }
        }
        separate_replicas(&mut slot_source, l, interleaver, rng_seed);
        let mut bit_slots = vec![0u32; n * l];
        let mut filled = vec![0usize; n];
        for (pos, &bit) in slot_source.iter().enumerate() {
            let b = bit as usize;
            bit_slots[b * l + filled[b]] = pos as u32;
            filled[b] += 1;
        }
        Ok(ShaperSpec { mapping, n, interleaver, seed: rng_seed, slot_source, bit_slots })
    }

    pub fn mapping(&self) -> &MappingTable {
        &self.mapping
    }
    pub fn l(&self) -> usize {
        self.mapping.l()
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn interleaver(&self) -> InterleaverKind {
        self.interleaver
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn q(&self) -> f64 {
        self.mapping.q()
    }

    /// ECC bit feeding input `slot` of mapper `node`.
    pub fn source(&self, node: usize, slot: usize) -> usize {
        self.slot_source[node * self.l() + slot] as usize
    }

    /// `(mapper, slot)` of every replica of ECC bit `bit`.
    pub fn replicas(&self, bit: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let l = self.l();
        self.bit_slots[bit * l..(bit + 1) * l]
            .iter()
            .map(move |&pos| (pos as usize / l, pos as usize % l))
    }

    /// Fraction of ECC bits whose replicas all sit in slots flagged in
    /// `blind` (slots that carry no information about the mapper output).
    ///
    /// Panics unless `blind` has one flag per slot.
    pub fn erased_fraction(&self, blind: &[bool]) -> f64 {
        assert_eq!(blind.len(), self.l(), "one flag per mapper slot");
        let erased = (0..self.n)
            .filter(|&i| self.replicas(i).all(|(_, k)| blind[k]))
            .count();
        erased as f64 / self.n as f64
    }

    pub fn descriptor(&self) -> ShaperDescriptor {
        ShaperDescriptor {
            l: self.l(),
            q: None,
            table: Some(self.mapping.to_bit_string()),
            interleaver: self.interleaver,
            seed: self.seed,
        }
    }
}

const REPLICA_REPAIR_ROUNDS: usize = 8;
const REPLICA_SWAP_TRIES: usize = 64;

/// Swaps entries so that no mapping node sees the same ECC bit twice, which
/// would put a length-2 cycle in the de-shaper graph. Structured swaps stay
/// within one slot column. Best effort for tiny `n`.
fn separate_replicas(slot_source: &mut [u32], l: usize, interleaver: InterleaverKind, rng_seed: u64) {
    let n = slot_source.len() / l;
    if l < 2 || n < 2 {
        return;
    }
    let repeated = |src: &[u32], j: usize, k: usize| {
        let v = src[j * l + k];
        (0..l).any(|k2| k2 != k && src[j * l + k2] == v)
    };
    let mut rng = seed::rng_at(rng_seed, &[tag::INTERLEAVER, u64::MAX]);
    for _ in 0..REPLICA_REPAIR_ROUNDS {
        let mut clean = true;
        for j in 0..n {
            for k in 0..l {
                if !repeated(slot_source, j, k) {
                    continue;
                }
                clean = false;
                for _ in 0..REPLICA_SWAP_TRIES {
                    let j2 = rng.random_range(0..n);
                    let k2 = match interleaver {
                        InterleaverKind::Structured => k,
                        InterleaverKind::Random => rng.random_range(0..l),
                    };
                    if j2 == j {
                        continue;
                    }
                    slot_source.swap(j * l + k, j2 * l + k2);
                    if !repeated(slot_source, j, k) && !repeated(slot_source, j2, k2) {
                        break;
                    }
                    slot_source.swap(j * l + k, j2 * l + k2);
                }
            }
        }
        if clean {
            return;
        }
    }
}

fn permutation(len: usize, rng_seed: u64) -> Vec<u32> {
    let mut v: Vec<u32> = (0..len as u32).collect();
    v.shuffle(&mut seed::rng(rng_seed));
    v
}

/// Shaper built from `L`, a dyadic target bias and the shaped length, with
/// structured interleaving and the [`MappingTable::for_bias`] table.
pub fn build_shaper(l: usize, target_q: f64, n_out: usize, rng_seed: u64) -> Result<ShaperSpec> {
    let ones = dyadic_ones(l, target_q)?;
    ShaperSpec::new(MappingTable::for_bias(l, ones)?, n_out, InterleaverKind::Structured, rng_seed)
}

fn dyadic_ones(l: usize, target_q: f64) -> Result<usize> {
    if l == 0 || l > MAX_L {
        return Err(Error::invalid("l", format!("{l} outside 1..={MAX_L}")));
    }
    let scaled = target_q * (1u64 << l) as f64;
    let ones = scaled.round();
    if !(0.0..=(1u64 << l) as f64).contains(&ones) || (scaled - ones).abs() > 1e-9 {
        return Err(Error::UnrepresentableBias { target: target_q, l });
    }
    Ok(ones as usize)
}

/// Shapes `N` ECC bits into `N` stored bits.
pub fn shape(spec: &ShaperSpec, ecc_bits: &[u8]) -> Result<Vec<u8>> {
    if ecc_bits.len() != spec.n {
        return Err(Error::LengthMismatch { expected: spec.n, actual: ecc_bits.len() });
    }
    let l = spec.l();
    Ok(spec
        .slot_source
        .chunks_exact(l)
        .map(|sources| {
            let pattern = sources
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &src)| acc | (((ecc_bits[src as usize] & 1) as usize) << k));
            spec.mapping.output(pattern) as u8
        })
        .collect())
}

/// Message passing on the shaper factor graph.
///
/// Each round updates all variable nodes toward the mappers, then all
/// mapping nodes. Returns `L^e(c_i)`, the sum of mapper messages into each
/// variable node, for the ECC decoder. `inner_iters = 0` returns zeros.
pub fn deshape(
    spec: &ShaperSpec,
    channel_llrs: &[f64],
    ecc_priors: &[f64],
    inner_iters: usize,
) -> Result<LlrFrame> {
    Deshaper::new(spec).run(spec, channel_llrs, ecc_priors, inner_iters)
}

/// De-shaper whose mapper-to-variable messages survive between calls, so
/// replicas of a bit keep exchanging evidence across global iterations.
#[derive(Debug, Clone)]
pub struct Deshaper {
    m2v: Vec<f64>,
    weights: Vec<f64>,
    v2m: Vec<f64>,
}

impl Deshaper {
    pub fn new(spec: &ShaperSpec) -> Self {
        let cells = spec.n * spec.l();
        Deshaper { m2v: vec![0.0; cells], weights: vec![0.0; 1 << spec.l()], v2m: vec![0.0; cells] }
    }

    pub fn reset(&mut self) {
        self.m2v.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn run(
        &mut self,
        spec: &ShaperSpec,
        channel_llrs: &[f64],
        ecc_priors: &[f64],
        inner_iters: usize,
    ) -> Result<LlrFrame> {
        let n = spec.n;
        for len in [channel_llrs.len(), ecc_priors.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, actual: len });
            }
        }
        if self.m2v.len() != n * spec.l() {
            return Err(Error::LengthMismatch { expected: n * spec.l(), actual: self.m2v.len() });
        }
        let l = spec.l();
        for _ in 0..inner_iters {
            for (i, slots) in spec.bit_slots.chunks_exact(l).enumerate() {
                let total = clamp_llr(ecc_priors[i]) + slots.iter().map(|&p| self.m2v[p as usize]).sum::<f64>();
                for &p in slots {
                    self.v2m[p as usize] = clamp_llr(total - self.m2v[p as usize]);
                }
            }
            for (j, (incoming, outgoing)) in self.v2m.chunks_exact(l).zip(self.m2v.chunks_exact_mut(l)).enumerate() {
                spec.mapping.extrinsic_into(channel_llrs[j], incoming, &mut self.weights, outgoing);
            }
        }
        let out = spec
            .bit_slots
            .chunks_exact(l)
            .map(|slots| slots.iter().map(|&p| self.m2v[p as usize]).sum())
            .collect();
        Ok(LlrFrame::new(out))
    }
}

/// Serializable shaper description. Either `table` (bits in pattern order)
/// or a dyadic `q` selects the mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShaperDescriptor {
    pub l: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(default)]
    pub interleaver: InterleaverKind,
    #[serde(default)]
    pub seed: u64,
}

impl ShaperDescriptor {
    pub fn mapping(&self) -> Result<MappingTable> {
        match (&self.table, self.q) {
            (Some(t), _) => {
                let m = MappingTable::from_bit_string(t)?;
                if m.l() != self.l {
                    return Err(Error::Parse {
                        what: "shaper",
                        reason: format!("table has L = {}, descriptor says {}", m.l(), self.l),
                    });
                }
                Ok(m)
            }
            (None, Some(q)) => MappingTable::for_bias(self.l, dyadic_ones(self.l, q)?),
            (None, None) => Err(Error::Parse { what: "shaper", reason: "need `table` or `q`".into() }),
        }
    }

    pub fn build(&self, n: usize) -> Result<ShaperSpec> {
        ShaperSpec::new(self.mapping()?, n, self.interleaver, self.seed)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("descriptor serializes")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse { what: "shaper", reason: e.to_string() })
    }
}
