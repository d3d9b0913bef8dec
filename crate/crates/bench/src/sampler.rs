//! Word sources named by a [`SamplerSpec`].

use anyhow::{anyhow, Result};
use rand::Rng;
use wh_core::graph::Preset;
use wh_core::walks::{self, DirectedSample, DirectedSampler, GroupWalk, LetterDistribution};
use wh_core::{cyclic_reduce, CyclicWord};

use crate::config::SamplerSpec;

#[derive(Debug, Clone)]
enum Source {
    UniformCyclic(usize),
    UniformNb(usize),
    Letters(LetterDistribution),
    Walk(GroupWalk),
    Directed(Box<DirectedSampler>),
}

#[derive(Debug, Clone)]
pub struct Sampler {
    pub spec: SamplerSpec,
    source: Source,
}

impl Sampler {
    pub fn new(spec: &SamplerSpec) -> Result<Self> {
        let source = match spec {
            SamplerSpec::UniformCyclic { rank } => Source::UniformCyclic(*rank),
            SamplerSpec::UniformNb { rank } => Source::UniformNb(*rank),
            SamplerSpec::BiasedPositive => Source::Letters(LetterDistribution::biased_positive()),
            SamplerSpec::GroupWalk { rank } => Source::Walk(GroupWalk::simple(*rank)),
            SamplerSpec::Directed { preset, rank, mode } => {
                let p = Preset::parse(preset).ok_or_else(|| anyhow!("unknown preset {preset:?}"))?;
                let gamma = p.build(*rank)?;
                Source::Directed(Box::new(DirectedSampler::new(gamma, None, *mode)?))
            }
        };
        Ok(Sampler {
            spec: spec.clone(),
            source,
        })
    }

    pub fn rank(&self) -> usize {
        self.spec.rank()
    }

    pub fn directed(&self) -> Option<&DirectedSampler> {
        match &self.source {
            Source::Directed(d) => Some(d),
            _ => None,
        }
    }

    pub fn group_walk(&self) -> Option<&GroupWalk> {
        match &self.source {
            Source::Walk(w) => Some(w),
            _ => None,
        }
    }

    /// A class of size parameter `n`; `None` when the sample reduces to the identity.
    pub fn class(&self, n: usize, rng: &mut impl Rng) -> Result<Option<CyclicWord>> {
        Ok(match &self.source {
            Source::UniformCyclic(rank) => Some(walks::uniform_cyclic_word(*rank, n, rng)),
            Source::UniformNb(rank) => reduce(&walks::uniform_nb(*rank, n, rng)),
            Source::Letters(d) => reduce(&d.sample(n, rng)),
            Source::Walk(w) => reduce(&w.sample(n, rng)),
            Source::Directed(d) => match d.sample(n, rng) {
                Ok(s) => Some(s.class),
                Err(wh_core::graph::GraphError::Degenerate) => None,
                Err(e) => return Err(e.into()),
            },
        })
    }

    /// A directed sample with its paths; errors for non-graph samplers.
    pub fn directed_sample(&self, n: usize, rng: &mut impl Rng) -> Result<DirectedSample> {
        let d = self
            .directed()
            .ok_or_else(|| anyhow!("sampler is not chain-directed"))?;
        Ok(d.sample(n, rng)?)
    }
}

fn reduce(w: &wh_core::Word) -> Option<CyclicWord> {
    cyclic_reduce(w).class
}
