use std::io::Write;

use crate::error::{Error, Result};
use crate::rng::Pcg32;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Column {
    prob: f64,
    alias: u32,
}

/// Walker/Vose alias table with its own random stream.
#[derive(Debug, Clone)]
pub struct SamplerState {
    columns: Vec<Column>,
    rng: Pcg32,
}

impl SamplerState {
    /// Builds the table in O(n). The draw distribution is `weights / sum(weights)`.
    pub fn new(weights: &[f64], seed: u64) -> Result<Self> {
        if let Some((index, &weight)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| w.is_nan() || **w < 0.0 || w.is_infinite())
        {
            return Err(Error::NegativeWeight { index, weight });
        }
        if weights.len() > u32::MAX as usize {
            return Err(Error::Degenerate("too many weights".into()));
        }
        let total: f64 = weights.iter().sum();
        if weights.is_empty() || total <= 0.0 {
            return Err(Error::Degenerate("all weights are zero".into()));
        }
        let n = weights.len();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut columns = vec![Column { prob: 1.0, alias: 0 }; n];
        for (i, c) in columns.iter_mut().enumerate() {
            c.alias = i as u32;
        }
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            columns[s] = Column {
                prob: scaled[s],
                alias: l as u32,
            };
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for i in small.into_iter().chain(large) {
            columns[i] = Column {
                prob: 1.0,
                alias: i as u32,
            };
        }
        Ok(SamplerState {
            columns,
            rng: Pcg32::seed_from_u64(seed),
        })
    }

    /// Uniform weights over `n` entries.
    pub fn uniform(n: usize, seed: u64) -> Result<Self> {
        Self::new(&vec![1.0; n], seed)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Probability of each index implied by the table.
    pub fn decode(&self) -> Vec<f64> {
        let n = self.columns.len() as f64;
        let mut p = vec![0.0; self.columns.len()];
        for (i, c) in self.columns.iter().enumerate() {
            p[i] += c.prob / n;
            p[c.alias as usize] += (1.0 - c.prob) / n;
        }
        p
    }

    #[inline]
    pub fn draw_one(&mut self) -> usize {
        let i = self.rng.index(self.columns.len());
        let c = self.columns[i];
        if self.rng.next_f64() < c.prob {
            i
        } else {
            c.alias as usize
        }
    }

    pub fn draw(&mut self, m: usize) -> Vec<usize> {
        (0..m).map(|_| self.draw_one()).collect()
    }
}

/// Writes indices one per line.
pub fn write_index_stream<W: Write>(mut out: W, indices: impl IntoIterator<Item = u64>) -> std::io::Result<()> {
    for i in indices {
        writeln!(out, "{i}")?;
    }
    out.flush()
}
