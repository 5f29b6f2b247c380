use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, tag, SimRng};

const RATE_TOLERANCE: f64 = 1e-6;
/// Rounds of swap repair aimed at short cycles.
const CYCLE_REPAIR_ROUNDS: usize = 8;
/// Rounds of swap repair aimed only at repeated edges.
const DOUBLE_EDGE_ROUNDS: usize = 64;
const SWAP_TRIES: usize = 16;

fn validate(lambda: &[(usize, f64)], a: usize) -> Result<f64> {
    if a == 0 {
        return Err(Error::invalid("a", "combiner factor must be positive"));
    }
    if lambda.is_empty() {
        return Err(Error::invalid("lambda", "empty degree distribution"));
    }
    let mut total = 0.0;
    let mut inv_avg = 0.0;
    for &(d, frac) in lambda {
        if d == 0 {
            return Err(Error::invalid("lambda", "degree 0"));
        }
        if !frac.is_finite() || frac < 0.0 {
            return Err(Error::invalid("lambda", format!("fraction {frac} for degree {d}")));
        }
        total += frac;
        inv_avg += frac / d as f64;
    }
    if (total - 1.0).abs() > RATE_TOLERANCE {
        return Err(Error::invalid("lambda", format!("fractions sum to {total}")));
    }
    Ok(inv_avg)
}

/// `a / (a + d̄_v)` with `d̄_v = 1 / Σ λ_i / i` (λ edge-perspective).
pub fn rate_of(lambda: &[(usize, f64)], a: usize) -> Result<f64> {
    let s = validate(lambda, a)? * a as f64;
    Ok(s / (1.0 + s))
}

/// A fixed IRA Tanner graph.
#[derive(Debug, Clone, PartialEq)]
pub struct IraCodeSpec {
    lambda: Vec<(usize, f64)>,
    a: usize,
    n: usize,
    k: usize,
    seed: u64,
    info_degrees: Vec<u32>,
    /// Info neighbours of check `j` at `j·a .. (j+1)·a`.
    check_info: Vec<u32>,
}

impl IraCodeSpec {
    pub fn lambda(&self) -> &[(usize, f64)] {
        &self.lambda
    }
    pub fn a(&self) -> usize {
        self.a
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    /// Number of checks, equal to the number of parity bits.
    pub fn m(&self) -> usize {
        self.n - self.k
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
    pub fn info_degrees(&self) -> &[u32] {
        &self.info_degrees
    }
    pub fn check_info(&self, j: usize) -> &[u32] {
        &self.check_info[j * self.a..(j + 1) * self.a]
    }

    /// Codeword positions joined by check `j`.
    pub fn check_vars(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        let parity = std::iter::once(self.k + j).chain((j > 0).then_some(self.k + j - 1));
        self.check_info(j).iter().map(|&v| v as usize).chain(parity)
    }

    /// Number of 4-cycles through two info nodes, and through one info node
    /// and the accumulator.
    pub fn four_cycles(&self) -> (usize, usize) {
        let adj = node_checks(&self.check_info, self.a, self.k);
        let mut info_info = 0;
        let mut info_chain = 0;
        for (v, checks) in adj.iter().enumerate() {
            let mut sorted = checks.clone();
            sorted.sort_unstable();
            info_chain += sorted.windows(2).filter(|w| w[1] == w[0] + 1).count();
            let mut local: Vec<u32> = Vec::new();
            for &c in checks {
                for &u in self.check_info(c as usize) {
                    if u as usize != v {
                        local.push(u);
                    }
                }
            }
            local.sort_unstable();
            info_info += local.windows(2).filter(|w| w[0] == w[1]).count();
        }
        (info_info / 2, info_chain)
    }

    pub fn descriptor(&self) -> CodeDescriptor {
        CodeDescriptor {
            degrees: self.lambda.iter().map(|&(d, _)| d).collect(),
            fractions: self.lambda.iter().map(|&(_, f)| f).collect(),
            a: self.a,
            n: self.n,
            seed: self.seed,
        }
    }
}

/// Serializable code description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeDescriptor {
    pub degrees: Vec<usize>,
    pub fractions: Vec<f64>,
    pub a: usize,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

impl CodeDescriptor {
    pub fn lambda(&self) -> Result<Vec<(usize, f64)>> {
        if self.degrees.len() != self.fractions.len() {
            return Err(Error::LengthMismatch { expected: self.degrees.len(), actual: self.fractions.len() });
        }
        Ok(self.degrees.iter().copied().zip(self.fractions.iter().copied()).collect())
    }

    pub fn build(&self) -> Result<IraCodeSpec> {
        build_code(&self.lambda()?, self.a, self.n, self.seed)
    }
}

fn node_checks(check_info: &[u32], a: usize, k: usize) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); k];
    for (e, &v) in check_info.iter().enumerate() {
        adj[v as usize].push((e / a) as u32);
    }
    adj
}

/// Node degrees whose edge total is exactly `edges`.
fn apportion(lambda: &[(usize, f64)], inv_avg: f64, k: usize, edges: usize) -> Result<Vec<u32>> {
    // Node-perspective fractions by largest remainder.
    let shares: Vec<f64> = lambda.iter().map(|&(d, f)| k as f64 * f / d as f64 / inv_avg).collect();
    let mut counts: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&x, &y| {
        let rx = shares[x] - shares[x].floor();
        let ry = shares[y] - shares[y].floor();
        ry.total_cmp(&rx).then(x.cmp(&y))
    });
    let missing = k - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    let mut by_degree: Vec<(usize, usize)> = lambda.iter().map(|&(d, _)| d).zip(counts).collect();
    by_degree.sort_by_key(|&(d, _)| std::cmp::Reverse(d));
    let mut degrees: Vec<u32> = by_degree
        .iter()
        .flat_map(|&(d, c)| std::iter::repeat_n(d as u32, c))
        .collect();

    // Spread the rounding residue over the highest-degree nodes, one edge
    // each per sweep.
    let mut diff = edges as i64 - degrees.iter().map(|&d| d as i64).sum::<i64>();
    while diff != 0 {
        let before = diff;
        for d in degrees.iter_mut() {
            if diff == 0 {
                break;
            }
            if diff > 0 {
                *d += 1;
                diff -= 1;
            } else if *d > 1 {
                *d -= 1;
                diff += 1;
            }
        }
        if diff == before {
            return Err(Error::InfeasibleCode(format!("cannot place {edges} edges on {k} info nodes")));
        }
    }
    Ok(degrees)
}

struct Graph {
    a: usize,
    m: usize,
    sockets: Vec<u32>,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    fn check(&self, c: usize) -> &[u32] {
        &self.sockets[c * self.a..(c + 1) * self.a]
    }

    fn contains(&self, c: usize, v: u32, skip: usize) -> bool {
        (c * self.a..(c + 1) * self.a).any(|e| e != skip && self.sockets[e] == v)
    }

    /// Whether socket `e` creates a repeated edge, or with `cycles` a 4-cycle.
    fn bad(&self, e: usize, cycles: bool) -> bool {
        let v = self.sockets[e];
        let c = e / self.a;
        if self.contains(c, v, e) {
            return true;
        }
        if !cycles {
            return false;
        }
        if (c > 0 && self.contains(c - 1, v, usize::MAX)) || (c + 1 < self.m && self.contains(c + 1, v, usize::MAX)) {
            return true;
        }
        for &u in self.check(c) {
            if u == v {
                continue;
            }
            for &c2 in &self.adj[u as usize] {
                if c2 as usize != c && self.contains(c2 as usize, v, usize::MAX) {
                    return true;
                }
            }
        }
        false
    }

    fn swap(&mut self, e1: usize, e2: usize) {
        let (v1, v2) = (self.sockets[e1], self.sockets[e2]);
        let (c1, c2) = ((e1 / self.a) as u32, (e2 / self.a) as u32);
        self.sockets.swap(e1, e2);
        if let Some(x) = self.adj[v1 as usize].iter_mut().find(|x| **x == c1) {
            *x = c2;
        }
        if let Some(x) = self.adj[v2 as usize].iter_mut().find(|x| **x == c2) {
            *x = c1;
        }
    }

    fn repair(&mut self, rounds: usize, cycles: bool, rng: &mut SimRng) -> usize {
        let total = self.sockets.len();
        for _ in 0..rounds {
            let bad: Vec<usize> = (0..total).filter(|&e| self.bad(e, cycles)).collect();
            if bad.is_empty() {
                return 0;
            }
            for e in bad {
                if !self.bad(e, cycles) {
                    continue;
                }
                for _ in 0..SWAP_TRIES {
                    let other = rng.random_range(0..total);
                    if other / self.a == e / self.a || self.sockets[other] == self.sockets[e] {
                        continue;
                    }
                    self.swap(e, other);
                    if !self.bad(e, cycles) && !self.bad(other, cycles) {
                        break;
                    }
                    self.swap(e, other);
                }
            }
        }
        (0..total).filter(|&e| self.bad(e, cycles)).count()
    }
}

/// Builds a seeded IRA graph with `K = round(R·N)` information bits.
///
/// Info-node degrees follow λ converted to node perspective, sockets are
/// shuffled onto the checks, and a bounded swap repair removes repeated
/// edges (required) and 4-cycles (best effort).
pub fn build_code(lambda: &[(usize, f64)], a: usize, n_codeword: usize, rng_seed: u64) -> Result<IraCodeSpec> {
    let inv_avg = validate(lambda, a)?;
    let rate = rate_of(lambda, a)?;
    let k = (rate * n_codeword as f64).round() as usize;
    if k == 0 || k >= n_codeword {
        return Err(Error::InfeasibleCode(format!("N = {n_codeword} gives {k} information bits")));
    }
    let m = n_codeword - k;
    let edges = a * m;
    let info_degrees = apportion(lambda, inv_avg, k, edges)?;
    if info_degrees.iter().any(|&d| d as usize > m) {
        return Err(Error::InfeasibleCode(format!("degree exceeds the {m} checks")));
    }

    let mut rng = seed::rng_at(rng_seed, &[tag::GRAPH]);
    let mut sockets: Vec<u32> = info_degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n(v as u32, d as usize))
        .collect();
    sockets.shuffle(&mut rng);
    let adj = node_checks(&sockets, a, k);
    let mut graph = Graph { a, m, sockets, adj };
    graph.repair(CYCLE_REPAIR_ROUNDS, true, &mut rng);
    if graph.repair(DOUBLE_EDGE_ROUNDS, false, &mut rng) > 0 {
        return Err(Error::InfeasibleCode("repeated edges remain after repair".into()));
    }
    Ok(IraCodeSpec {
        lambda: lambda.to_vec(),
        a,
        n: n_codeword,
        k,
        seed: rng_seed,
        info_degrees,
        check_info: graph.sockets,
    })
}

/// Systematic encoding `[info | parity]`.
pub fn encode(spec: &IraCodeSpec, info_bits: &[u8]) -> Result<Vec<u8>> {
    if info_bits.len() != spec.k {
        return Err(Error::LengthMismatch { expected: spec.k, actual: info_bits.len() });
    }
    let mut word = Vec::with_capacity(spec.n);
    word.extend(info_bits.iter().map(|b| b & 1));
    let mut acc = 0u8;
    for j in 0..spec.m() {
        for &v in spec.check_info(j) {
            acc ^= word[v as usize];
        }
        word.push(acc);
    }
    Ok(word)
}

/// Parity of every check; all zero for a codeword.
pub fn syndrome(spec: &IraCodeSpec, word: &[u8]) -> Result<Vec<u8>> {
    if word.len() != spec.n {
        return Err(Error::LengthMismatch { expected: spec.n, actual: word.len() });
    }
    Ok((0..spec.m())
        .map(|j| spec.check_vars(j).fold(0u8, |s, v| s ^ (word[v] & 1)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CODE_64: [(usize, f64); 2] = [(3, 0.567736), (50, 0.432264)];
    const CODE_128: [(usize, f64); 2] = [(3, 0.501564), (50, 0.498436)];

    #[test]
    fn reference_rates() {
        assert!((rate_of(&CODE_64, 6).unwrap() - 0.542824).abs() < 1e-5);
        assert!((rate_of(&CODE_128, 4).unwrap() - 0.414735).abs() < 1e-5);
        assert_eq!(rate_of(&[(2, 1.0)], 2).unwrap(), 0.5);
    }

    #[test]
    fn rate_matches_independent_formula() {
        // a / (a + d_v) with d_v the harmonic mean of edge degrees.
        let dv = 1.0 / (0.567736 / 3.0 + 0.432264 / 50.0);
        assert!((rate_of(&CODE_64, 6).unwrap() - 6.0 / (6.0 + dv)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_distributions_rejected() {
        assert!(rate_of(&[], 2).is_err());
        assert!(rate_of(&[(3, 0.5)], 2).is_err());
        assert!(rate_of(&[(0, 1.0)], 2).is_err());
        assert!(rate_of(&[(3, 1.0)], 0).is_err());
        assert!(rate_of(&[(3, 1.2), (4, -0.2)], 2).is_err());
    }

    #[test]
    fn table_code_dimensions() {
        let code = build_code(&CODE_64, 6, 4096, 1).unwrap();
        assert_eq!(code.k(), 2223);
        assert_eq!(code.m(), 1873);
        let edges: u32 = code.info_degrees().iter().sum();
        assert_eq!(edges as usize, 6 * 1873);
        let code = build_code(&CODE_128, 4, 16384, 1).unwrap();
        assert_eq!(code.k(), (0.414735f64 * 16384.0).round() as usize);
    }

    #[test]
    fn no_repeated_edges() {
        let code = build_code(&CODE_64, 6, 1024, 3).unwrap();
        for j in 0..code.m() {
            let mut c = code.check_info(j).to_vec();
            c.sort_unstable();
            c.dedup();
            assert_eq!(c.len(), 6);
        }
    }

    #[test]
    fn low_degree_code_is_four_cycle_free() {
        let code = build_code(&[(3, 1.0)], 3, 2000, 4).unwrap();
        assert_eq!(code.four_cycles(), (0, 0));
    }

    #[test]
    fn deterministic_construction() {
        assert_eq!(build_code(&CODE_64, 6, 1024, 9).unwrap(), build_code(&CODE_64, 6, 1024, 9).unwrap());
        assert_ne!(build_code(&CODE_64, 6, 1024, 9).unwrap(), build_code(&CODE_64, 6, 1024, 10).unwrap());
    }

    #[test]
    fn toy_code_accumulator() {
        let code = build_code(&[(2, 1.0)], 2, 6, 0).unwrap();
        assert_eq!((code.k(), code.m()), (3, 3));
        for word in 0u8..8 {
            let info: Vec<u8> = (0..3).map(|i| (word >> i) & 1).collect();
            let cw = encode(&code, &info).unwrap();
            assert_eq!(&cw[..3], &info[..]);
            let mut p = 0;
            for j in 0..3 {
                p ^= code.check_info(j).iter().fold(0, |s, &v| s ^ info[v as usize]);
                assert_eq!(cw[3 + j], p);
            }
            assert!(syndrome(&code, &cw).unwrap().iter().all(|&s| s == 0));
        }
    }

    #[test]
    fn codewords_satisfy_checks() {
        let code = build_code(&CODE_64, 6, 1024, 2).unwrap();
        let mut rng = seed::rng(1);
        for _ in 0..20 {
            let info: Vec<u8> = (0..code.k()).map(|_| rng.random::<bool>() as u8).collect();
            let cw = encode(&code, &info).unwrap();
            assert!(syndrome(&code, &cw).unwrap().iter().all(|&s| s == 0));
        }
        assert!(encode(&code, &[0u8; 10]).is_err());
        assert!(encode(&code, &vec![0u8; code.k()]).unwrap().iter().all(|&b| b == 0));
    }

    #[test]
    fn descriptor_round_trip() {
        let code = build_code(&CODE_64, 6, 1024, 5).unwrap();
        let text = toml::to_string(&code.descriptor()).unwrap();
        let back: CodeDescriptor = toml::from_str(&text).unwrap();
        assert_eq!(back.build().unwrap(), code);
    }
}
