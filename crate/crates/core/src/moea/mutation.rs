use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::library::GateFunction;
use crate::netlist::{Chromosome, MappedDesign};

/// Per-gene value domain. Frozen genes keep whatever value they start with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneSpace {
    counts: Vec<usize>,
    frozen: Vec<bool>,
}

impl GeneSpace {
    pub fn new(counts: Vec<usize>) -> Self {
        let frozen = vec![false; counts.len()];
        GeneSpace { counts, frozen }
    }

    /// Every gate of `design` is a gene. With `parameterised`, only gates whose
    /// function is listed may mutate.
    pub fn from_design(
        design: &MappedDesign,
        parameterised: Option<&BTreeSet<GateFunction>>,
    ) -> Self {
        let counts = design.variant_counts();
        let frozen = design
            .netlist()
            .gates
            .iter()
            .map(|g| parameterised.is_some_and(|set| !set.contains(&g.function)))
            .collect();
        GeneSpace { counts, frozen }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn variant_count(&self, gene: usize) -> usize {
        self.counts[gene]
    }

    pub fn is_frozen(&self, gene: usize) -> bool {
        self.frozen[gene]
    }

    /// Genes that can actually change.
    pub fn mutable_genes(&self) -> usize {
        (0..self.len())
            .filter(|&i| !self.frozen[i] && self.counts[i] > 1)
            .count()
    }

    pub fn check(&self, c: &Chromosome) -> Result<()> {
        if c.len() != self.len() {
            return Err(Error::InvalidChromosome {
                index: None,
                reason: format!("length {} does not match {} genes", c.len(), self.len()),
            });
        }
        for (i, (&g, &n)) in c.genes().iter().zip(&self.counts).enumerate() {
            if g >= n {
                return Err(Error::InvalidChromosome {
                    index: Some(i),
                    reason: format!("gene {i} is {g} but only {n} variants exist"),
                });
            }
        }
        Ok(())
    }
}

/// Each mutable gene, with probability `rate`, moves to a uniformly chosen
/// *different* variant. Single-variant and frozen genes never change.
pub fn mutate<R: Rng + ?Sized>(
    c: &Chromosome,
    space: &GeneSpace,
    rate: f64,
    rng: &mut R,
) -> Chromosome {
    let mut out = c.clone();
    for (i, gene) in out.genes_mut().iter_mut().enumerate() {
        let n = space.counts[i];
        if space.frozen[i] || n < 2 {
            continue;
        }
        if rng.gen::<f64>() < rate {
            let pick = rng.gen_range(0..n - 1);
            *gene = if pick >= *gene { pick + 1 } else { pick };
        }
    }
    out
}

/// Independent random stream for one `(generation, individual)` slot.
pub fn stream_rng(root: u64, generation: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(((generation as u64) << 32) | (index as u64 & 0xffff_ffff));
    rng
}
