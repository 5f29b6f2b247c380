use super::code::IraCodeSpec;
use crate::error::{Error, Result};
use crate::llr::{clamp_llr, LlrFrame};

/// Sum-product iterations per call from the global loop.
pub const DEFAULT_DECODER_ITERS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    /// Sum of check-to-variable messages for every coded bit.
    pub extrinsic: LlrFrame,
    pub info_bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

/// Flooding sum-product decoder with message state kept between calls.
///
/// Keeping check messages across calls lets the global loop resume where
/// the previous pass stopped while the priors are refined.
#[derive(Debug, Clone)]
pub struct IraDecoder {
    n: usize,
    k: usize,
    check_start: Vec<u32>,
    edge_var: Vec<u32>,
    var_start: Vec<u32>,
    var_edges: Vec<u32>,
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    scratch: Vec<f64>,
    total: Vec<f64>,
}

impl IraDecoder {
    pub fn new(spec: &IraCodeSpec) -> Self {
        let n = spec.n();
        let mut check_start = Vec::with_capacity(spec.m() + 1);
        let mut edge_var = Vec::new();
        check_start.push(0);
        for j in 0..spec.m() {
            edge_var.extend(spec.check_vars(j).map(|v| v as u32));
            check_start.push(edge_var.len() as u32);
        }
        let mut degree = vec![0u32; n + 1];
        for &v in &edge_var {
            degree[v as usize + 1] += 1;
        }
        for i in 0..n {
            degree[i + 1] += degree[i];
        }
        let var_start = degree;
        let mut fill = var_start.clone();
        let mut var_edges = vec![0u32; edge_var.len()];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[fill[v as usize] as usize] = e as u32;
            fill[v as usize] += 1;
        }
        let edges = edge_var.len();
        let max_check = check_start.windows(2).map(|w| (w[1] - w[0]) as usize).max().unwrap_or(0);
        IraDecoder {
            n,
            k: spec.k(),
            check_start,
            edge_var,
            var_start,
            var_edges,
            c2v: vec![0.0; edges],
            v2c: vec![0.0; edges],
            scratch: vec![0.0; max_check],
            total: vec![0.0; n],
        }
    }

    /// Clears all messages.
    pub fn reset(&mut self) {
        self.c2v.iter_mut().for_each(|x| *x = 0.0);
    }

    fn var_edges(&self, v: usize) -> &[u32] {
        &self.var_edges[self.var_start[v] as usize..self.var_start[v + 1] as usize]
    }

    /// Up to `max_iters` flooding iterations, stopping once every check is
    /// satisfied by nonzero posterior LLRs.
    pub fn run(&mut self, priors: &[f64], max_iters: usize) -> Result<DecodeOutput> {
        if priors.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: priors.len() });
        }
        let mut converged = false;
        let mut iterations = 0;
        while iterations < max_iters {
            iterations += 1;
            for v in 0..self.n {
                let range = self.var_start[v] as usize..self.var_start[v + 1] as usize;
                let sum: f64 = self.var_edges[range.clone()].iter().map(|&e| self.c2v[e as usize]).sum();
                let total = clamp_llr(priors[v]) + sum;
                for &e in &self.var_edges[range] {
                    self.v2c[e as usize] = clamp_llr(total - self.c2v[e as usize]);
                }
            }
            for w in self.check_start.windows(2) {
                let (lo, hi) = (w[0] as usize, w[1] as usize);
                let t = &mut self.scratch[..hi - lo];
                for (x, &m) in t.iter_mut().zip(&self.v2c[lo..hi]) {
                    *x = (0.5 * m).tanh();
                }
                // Products excluding each edge: forward pass stores prefixes
                // in c2v, backward pass multiplies suffixes in.
                let mut prefix = 1.0;
                for (i, &x) in t.iter().enumerate() {
                    self.c2v[lo + i] = prefix;
                    prefix *= x;
                }
                let mut suffix = 1.0;
                for i in (0..t.len()).rev() {
                    let p = self.c2v[lo + i] * suffix;
                    self.c2v[lo + i] = clamp_llr(2.0 * p.atanh());
                    suffix *= t[i];
                }
            }
            if self.posterior_ok(priors) {
                converged = true;
                break;
            }
        }
        if iterations == 0 {
            self.posterior_ok(priors);
        }
        let extrinsic: Vec<f64> = (0..self.n)
            .map(|v| self.var_edges(v).iter().map(|&e| self.c2v[e as usize]).sum())
            .collect();
        let info_bits = self.total[..self.k].iter().map(|&l| (l < 0.0) as u8).collect();
        Ok(DecodeOutput { extrinsic: LlrFrame::new(extrinsic), info_bits, converged, iterations })
    }

    /// Fills `total` and reports whether hard decisions satisfy every check
    /// with no zero LLR.
    fn posterior_ok(&mut self, priors: &[f64]) -> bool {
        let mut ok = true;
        for v in 0..self.n {
            let range = self.var_start[v] as usize..self.var_start[v + 1] as usize;
            let sum: f64 = self.var_edges[range].iter().map(|&e| self.c2v[e as usize]).sum();
            let t = clamp_llr(priors[v]) + sum;
            ok &= t != 0.0;
            self.total[v] = t;
        }
        ok && self.check_start.windows(2).all(|w| {
            !self.edge_var[w[0] as usize..w[1] as usize]
                .iter()
                .fold(false, |s, &v| s ^ (self.total[v as usize] < 0.0))
        })
    }
}

/// One-shot decode with fresh messages.
pub fn decode(spec: &IraCodeSpec, priors: &[f64], max_iters: usize) -> Result<DecodeOutput> {
    IraDecoder::new(spec).run(priors, max_iters)
}
