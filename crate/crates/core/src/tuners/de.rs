use rand::Rng as _;

use super::{bounds, decode, encode, sample_space, Objective, TuneArchive, TuneOutcome, DIMENSIONS};
use crate::error::{Error, Result};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeParams {
    /// Population size.
    pub np: usize,
    /// Differential weight.
    pub f: f64,
    /// Crossover probability.
    pub cr: f64,
    pub generations: usize,
}

impl Default for DeParams {
    fn default() -> Self {
        DeParams {
            np: 20,
            f: 0.75,
            cr: 0.3,
            generations: 10,
        }
    }
}

impl DeParams {
    pub fn validate(&self) -> Result<()> {
        if self.np < 4 {
            return Err(Error::InvalidArgument(format!("DE needs np >= 4, got {}", self.np)));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::InvalidArgument(format!("crossover {} outside [0, 1]", self.cr)));
        }
        if !(self.f > 0.0) {
            return Err(Error::InvalidArgument(format!("differential weight {} must be positive", self.f)));
        }
        Ok(())
    }

    /// Upper bound on objective calls.
    pub fn max_evaluations(&self) -> usize {
        self.np * (self.generations + 1)
    }
}

/// Differential evolution (rand/1/bin) with greedy replacement.
pub fn de_tune(objective: &mut dyn Objective, params: &DeParams, seed: u64) -> Result<TuneOutcome> {
    params.validate()?;
    let mut rng = seeds::derived_rng(seed, &[&"de"]);
    let mut archive = TuneArchive::new(params.max_evaluations());
    let box_bounds = bounds();

    let mut population: Vec<([f64; DIMENSIONS], f64)> = Vec::with_capacity(params.np);
    for config in sample_space(params.np, seed) {
        let score = archive.score(objective, &config)?.expect("budget covers the population");
        population.push((encode(&config), score));
    }
    let mut trace = vec![archive.best().map_or(f64::INFINITY, |b| b.score)];

    for _ in 0..params.generations {
        for i in 0..params.np {
            let mut donors = [i; 3];
            for slot in 0..3 {
                loop {
                    let pick = rng.gen_range(0..params.np);
                    if pick != i && !donors[..slot].contains(&pick) {
                        donors[slot] = pick;
                        break;
                    }
                }
            }
            let [a, b, c] = donors.map(|d| population[d].0);
            let forced = rng.gen_range(0..DIMENSIONS);
            let mut candidate = population[i].0;
            for k in 0..DIMENSIONS {
                if k == forced || rng.gen::<f64>() < params.cr {
                    candidate[k] = (a[k] + params.f * (b[k] - c[k])).clamp(box_bounds[k].0, box_bounds[k].1);
                }
            }
            let config = decode(&candidate);
            let Some(score) = archive.score(objective, &config)? else {
                break;
            };
            if score < population[i].1 {
                population[i] = (encode(&config), score);
            }
        }
        trace.push(archive.best().map_or(f64::INFINITY, |b| b.score));
    }
    TuneOutcome::from_archive(archive, trace)
}
