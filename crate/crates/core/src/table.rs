//! Dense-table helpers shared by the information and scoring code.
//!
//! A state index packs one bit per node, node 0 in the least significant bit.
//! Tables hold nonnegative weights (probabilities or counts) per state.

/// `x log2 x` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Packs the bits of `state` at positions `vars` into a dense index
/// (first listed variable in the least significant bit).
#[inline]
pub(crate) fn gather(state: usize, vars: &[usize]) -> usize {
    vars.iter().enumerate().fold(0, |acc, (k, &v)| acc | (((state >> v) & 1) << k))
}

pub(crate) fn mask_of(vars: &[usize]) -> u32 {
    vars.iter().fold(0u32, |m, &v| m | (1 << v))
}

pub(crate) fn vars_of(mask: u32) -> Vec<usize> {
    (0..32).filter(|&v| mask & (1 << v) != 0).collect()
}

/// Marginal table over `vars` (length `2^|vars|`).
pub(crate) fn marginal(table: &[f64], vars: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << vars.len()];
    for (state, &w) in table.iter().enumerate() {
        out[gather(state, vars)] += w;
    }
    out
}

/// `-sum w log2 w` of an already-normalized table.
pub(crate) fn entropy_bits(table: &[f64]) -> f64 {
    -table.iter().map(|&w| xlog2x(w)).sum::<f64>()
}

/// Entropy of the variables in `mask`, in bits, for a normalized joint table.
pub(crate) fn entropy_mask(table: &[f64], mask: u32) -> f64 {
    if mask == 0 {
        return 0.0;
    }
    entropy_bits(&marginal(table, &vars_of(mask)))
}

/// Conditional entropy `H(target | given)` in bits. Zero-mass conditioning
/// states contribute nothing.
pub(crate) fn cond_entropy_mask(table: &[f64], target: u32, given: u32) -> f64 {
    entropy_mask(table, target | given) - entropy_mask(table, given)
}

/// Maps each joint state to the cell of a `(child, parents)` family:
/// parent configuration in the low bits, the child bit on top.
#[derive(Clone, Debug)]
pub(crate) struct FamilyIndex {
    pub cell: Vec<u16>,
    pub parent_configs: usize,
}

impl FamilyIndex {
    pub fn new(n: usize, child: usize, parents: &[usize]) -> Self {
        let parent_configs = 1usize << parents.len();
        let cell =
            (0..1usize << n).map(|s| (gather(s, parents) + ((s >> child) & 1) * parent_configs) as u16).collect();
        Self { cell, parent_configs }
    }

    /// `sum_{x, pa} w(x, pa) log2 (w(x, pa) / w(pa))`, i.e. the family's
    /// contribution to the maximized log-likelihood when `w` holds counts.
    pub fn loglik(&self, weights: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.resize(2 * self.parent_configs, 0.0);
        for (s, &w) in weights.iter().enumerate() {
            scratch[self.cell[s] as usize] += w;
        }
        let mut acc = 0.0;
        for pa in 0..self.parent_configs {
            let w0 = scratch[pa];
            let w1 = scratch[pa + self.parent_configs];
            acc += xlog2x(w0) + xlog2x(w1) - xlog2x(w0 + w1);
        }
        acc
    }

    /// Adds `log2 w(x_child | pa)` to `out[x]` for every state `x`.
    pub fn add_log2_conditional(&self, weights: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.resize(2 * self.parent_configs, 0.0);
        for (s, &w) in weights.iter().enumerate() {
            scratch[self.cell[s] as usize] += w;
        }
        for (s, o) in out.iter_mut().enumerate() {
            let c = self.cell[s] as usize;
            let pa = c % self.parent_configs;
            let mass = scratch[pa] + scratch[pa + self.parent_configs];
            *o += (scratch[c] / mass).log2();
        }
    }
}
