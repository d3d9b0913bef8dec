//! Per-trial measurements and their aggregation.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use rand::Rng;
use serde_json::{json, Value};
use wh_core::algo::{equivalent, minimize, stabilizer_generators, AlgoError};
use wh_core::currents::{
    characteristic_current, counting_current, counting_current_path, default_probes, projective_distance, WeightTable,
};
use wh_core::fsmc::Scalar;
use wh_core::minimality::is_strictly_minimal;
use wh_core::walks::{derive_seed, rng_from_seed};
use wh_core::word::Letter;
use wh_core::{CyclicWord, Move, MoveSet, Word};

use crate::config::{ExperimentConfig, ExperimentId, SamplerSpec};
use crate::record::{log_log_slope, mean, median, quantile, Status, Summary, SummaryRow, TrialRecord};
use crate::sampler::Sampler;

/// Everything a trial needs that does not depend on the seed.
pub struct Context {
    pub config: ExperimentConfig,
    pub moves: MoveSet,
    pub sampler: Sampler,
    extra: Extra,
}

enum Extra {
    None,
    Shortening {
        tau: usize,
    },
    Adapted {
        target: Option<WeightTable>,
        probes: Vec<Vec<usize>>,
    },
    Quasi {
        inverse: Vec<Option<usize>>,
    },
}

/// Index of `a ↦ a b⁻¹, b ↦ b` among the rank-2 moves.
pub fn shortening_move(moves: &MoveSet) -> Result<usize> {
    let (a, b) = (Letter::new(1, false), Letter::new(2, false));
    let (ta, tb) = (Word::parse("aB")?, Word::parse("b")?);
    moves
        .entries()
        .iter()
        .find(|e| e.mv.image(a) == &ta && e.mv.image(b) == &tb)
        .map(|e| e.index)
        .ok_or_else(|| anyhow!("move a -> aB not found"))
}

/// `1 + (2N-3)/(2N²-N)`.
pub fn lambda0(rank: usize) -> f64 {
    let n = rank as f64;
    1.0 + (2.0 * n - 3.0) / (2.0 * n * n - n)
}

impl Context {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let sampler = Sampler::new(&config.sampler)?;
        let moves = MoveSet::new(sampler.rank())?;
        let extra = match config.experiment {
            ExperimentId::BiasedRatio => {
                if sampler.rank() != 2 {
                    bail!("biased-ratio needs a rank-2 sampler");
                }
                Extra::Shortening {
                    tau: shortening_move(&moves)?,
                }
            }
            ExperimentId::Adaptedness => match (&config.sampler, sampler.directed()) {
                (_, Some(d)) => {
                    let depth = config.params.probe_depth;
                    Extra::Adapted {
                        target: Some(characteristic_current(&d.gamma, depth)?),
                        probes: default_probes(&d.gamma.graph, depth),
                    }
                }
                (SamplerSpec::GroupWalk { .. }, None) => {
                    let rose = wh_core::graph::MarkedGraph::rose(sampler.rank())?;
                    Extra::Adapted {
                        target: None,
                        probes: default_probes(&rose, config.params.probe_depth),
                    }
                }
                _ => bail!("adaptedness needs a chain-directed or group-walk sampler"),
            },
            ExperimentId::QuasiInversion => {
                let d = sampler
                    .directed()
                    .ok_or_else(|| anyhow!("quasi-inversion needs a chain-directed sampler"))?;
                if !d.gamma.chain.is_tight() {
                    bail!("quasi-inversion needs a tight chain (every transition probability below 1)");
                }
                Extra::Quasi {
                    inverse: d.gamma.state_inverses(),
                }
            }
            _ => Extra::None,
        };
        Ok(Context {
            config: config.clone(),
            moves,
            sampler,
            extra,
        })
    }

    pub fn seed(&self, n: usize, trial: usize) -> u64 {
        derive_seed(self.config.seed, self.config.experiment.name(), n as u64, trial as u64)
    }

    /// Runs one trial. Failures become records with an error status.
    pub fn run_trial(&self, n: usize, trial: usize) -> TrialRecord {
        let seed = self.seed(n, trial);
        let mut rng = rng_from_seed(seed);
        let start = Instant::now();
        let outcome = self.measure(n, &mut rng);
        let elapsed = start.elapsed().as_nanos() as u64;
        let (status, values, runtime) = match outcome {
            Ok(Outcome::Done(values, runtime)) => (Status::Ok, values, runtime.unwrap_or(elapsed)),
            Ok(Outcome::Skipped(why)) => (Status::Skipped(why), BTreeMap::new(), elapsed),
            Err(e) => (Status::Error(format!("{e:#}")), BTreeMap::new(), elapsed),
        };
        TrialRecord {
            id: TrialRecord::id_for(self.config.experiment, n, trial),
            experiment: self.config.experiment,
            n,
            trial,
            seed,
            status,
            values,
            runtime_ns: Some(runtime),
        }
    }

    fn class(&self, n: usize, rng: &mut impl Rng) -> Result<Option<CyclicWord>> {
        self.sampler.class(n, rng)
    }

    fn measure(&self, n: usize, rng: &mut impl Rng) -> Result<Outcome> {
        let mut v = BTreeMap::new();
        match self.config.experiment {
            ExperimentId::StrictMinimality => {
                let Some(c) = self.class(n, rng)? else {
                    return Ok(skip());
                };
                v.insert("length".into(), json!(c.len()));
                v.insert("strict".into(), json!(is_strictly_minimal(&self.moves, &c)));
            }
            ExperimentId::BiasedRatio => {
                let Extra::Shortening { tau } = self.extra else {
                    unreachable!()
                };
                let Some(c) = self.class(n, rng)? else {
                    return Ok(skip());
                };
                let image = self.moves.get(tau).apply_to_class(&c);
                let (before, after) = (c.len() as f64, image.len() as f64);
                v.insert("length".into(), json!(c.len()));
                v.insert("image_length".into(), json!(image.len()));
                v.insert("ratio".into(), json!(after / before));
                v.insert("drop_per_n".into(), json!((before - after) / n as f64));
            }
            ExperimentId::Lambda0 => {
                let Some(c) = self.class(n, rng)? else {
                    return Ok(skip());
                };
                let mut buf = Vec::new();
                let mut ratios = Vec::new();
                let mut first_exact = true;
                let mut min_second = f64::INFINITY;
                for e in self.moves.outer() {
                    let len = e.mv.image_length(&c, &mut buf);
                    let r = len as f64 / c.len() as f64;
                    if e.is_first_kind {
                        first_exact &= len == c.len();
                    } else {
                        min_second = min_second.min(r);
                    }
                    ratios.push(r);
                }
                v.insert("length".into(), json!(c.len()));
                v.insert("ratios".into(), json!(ratios));
                v.insert("first_kind_exact".into(), json!(first_exact));
                v.insert("min_second_kind".into(), json!(min_second));
            }
            ExperimentId::Adaptedness => {
                let Extra::Adapted { target, probes } = &self.extra else {
                    unreachable!()
                };
                let depth = self.config.params.probe_depth;
                match target {
                    Some(target) => {
                        let s = self.sampler.directed_sample(n, rng)?;
                        let graph = &self.sampler.directed().expect("directed sampler").gamma.graph;
                        let table = counting_current_path(graph, &s.closed, depth)?;
                        v.insert("closed_length".into(), json!(s.closed.len()));
                        v.insert("distance".into(), json!(projective_distance(&table, target, probes)?));
                    }
                    None => {
                        let walk = self.sampler.group_walk().expect("group walk sampler");
                        let words = walk.sample_prefixes(&[n, 2 * n], rng);
                        let classes: Vec<Option<CyclicWord>> =
                            words.iter().map(|w| wh_core::cyclic_reduce(w).class).collect();
                        let (Some(a), Some(b)) = (&classes[0], &classes[1]) else {
                            return Ok(skip());
                        };
                        let rank = self.sampler.rank();
                        let ta = counting_current(a, rank, depth)?;
                        let tb = counting_current(b, rank, depth)?;
                        v.insert("length".into(), json!(a.len()));
                        v.insert("length_2n".into(), json!(b.len()));
                        v.insert("cauchy_distance".into(), json!(projective_distance(&ta, &tb, probes)?));
                    }
                }
            }
            ExperimentId::MinsetStability => {
                let Some(c) = self.class(n, rng)? else {
                    return Ok(skip());
                };
                let m = minimize(&self.moves, &c);
                let stab = match stabilizer_generators(&self.moves, &m.result, self.config.params.vertex_cap) {
                    Ok(s) => s,
                    Err(AlgoError::CapExceeded(cap)) => {
                        return Ok(Outcome::Skipped(format!("component exceeds cap {cap}")))
                    }
                    Err(e) => return Err(e.into()),
                };
                let loops_fix = stab.loops.iter().all(|w| w.apply(&self.moves, &m.result) == m.result);
                v.insert("length".into(), json!(c.len()));
                v.insert("minimal_length".into(), json!(m.result.len()));
                v.insert("steps".into(), json!(m.steps));
                v.insert("component_size".into(), json!(stab.component_size));
                v.insert("stabilizer_loops".into(), json!(stab.loops.len()));
                v.insert("loops_fix_class".into(), json!(loops_fix));
            }
            ExperimentId::EquivFuzz => return self.equiv_trial(n, rng),
            ExperimentId::QuasiInversion => {
                let Extra::Quasi { inverse } = &self.extra else {
                    unreachable!()
                };
                let d = self.sampler.directed().expect("directed sampler");
                let states = d.states(n, rng);
                v.insert(
                    "event".into(),
                    json!(wh_core::fsmc::quasi_inversion_event(&states, inverse)),
                );
            }
        }
        Ok(Outcome::Done(v, None))
    }

    fn equiv_trial(&self, n: usize, rng: &mut impl Rng) -> Result<Outcome> {
        let Some(c) = self.class(n, rng)? else {
            return Ok(skip());
        };
        let outer: Vec<&Move> = self.moves.outer().map(|e| &e.mv).collect();
        let k = rng.gen_range(1..=self.config.params.max_product.max(1));
        let mut image = c.clone();
        for _ in 0..k {
            image = outer[rng.gen_range(0..outer.len())].apply_to_class(&image);
        }
        let Some(other) = self.class(n, rng)? else {
            return Ok(skip());
        };
        let cap = self.config.params.vertex_cap;
        let mut times = Vec::new();
        let mut manufactured = None;
        for _ in 0..self.config.params.repetitions {
            let start = Instant::now();
            let eq = equivalent(&self.moves, &c, &image, cap)?;
            times.push(start.elapsed().as_nanos() as f64);
            manufactured = Some(eq);
        }
        let manufactured = manufactured.expect("at least one repetition");
        let verified = manufactured.witness.as_ref().is_some_and(|w| {
            w.verify(&self.moves).is_ok() && w.source == c && w.target == image && w.apply(&self.moves, &c) == image
        });
        let independent = equivalent(&self.moves, &c, &other, cap)?;
        let false_positive = independent.equivalent
            && !independent
                .witness
                .as_ref()
                .is_some_and(|w| w.verify(&self.moves).is_ok() && w.apply(&self.moves, &c) == other);
        let mut v = BTreeMap::new();
        v.insert("length".into(), json!(c.len()));
        v.insert("product_length".into(), json!(k));
        v.insert("image_length".into(), json!(image.len()));
        v.insert("detected".into(), json!(manufactured.equivalent));
        v.insert("witness_verified".into(), json!(verified));
        v.insert("independent_equivalent".into(), json!(independent.equivalent));
        v.insert("false_positive".into(), json!(false_positive));
        Ok(Outcome::Done(v, Some(median(&times) as u64)))
    }
}

enum Outcome {
    Done(BTreeMap<String, Value>, Option<u64>),
    Skipped(String),
}

fn skip() -> Outcome {
    Outcome::Skipped("sample reduced to the identity".into())
}

fn fraction(records: &[&TrialRecord], key: &str) -> f64 {
    let hits = records.iter().filter(|r| r.bool(key) == Some(true)).count();
    hits as f64 / records.len().max(1) as f64
}

fn column(records: &[&TrialRecord], key: &str) -> Vec<f64> {
    records.iter().filter_map(|r| r.f64(key)).collect()
}

fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len().max(2) - 1) as f64).sqrt()
}

/// Folds the records of one experiment into per-length metrics.
pub fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> Summary {
    let mut rows = Vec::new();
    let mut global = BTreeMap::new();
    let rank = config.sampler.rank();
    for &n in &config.lengths {
        let all: Vec<&TrialRecord> = records.iter().filter(|r| r.n == n).collect();
        let ok: Vec<&TrialRecord> = all.iter().copied().filter(|r| r.is_ok()).collect();
        let mut m = BTreeMap::new();
        m.insert("ok".to_string(), ok.len() as f64);
        match config.experiment {
            ExperimentId::StrictMinimality => {
                let p = fraction(&ok, "strict");
                m.insert("strict_fraction".into(), p);
                m.insert("stderr".into(), (p * (1.0 - p) / ok.len().max(1) as f64).sqrt());
            }
            ExperimentId::BiasedRatio => {
                let ratios = column(&ok, "ratio");
                m.insert("mean_ratio".into(), mean(&ratios));
                m.insert("ratio_std".into(), std_dev(&ratios));
                m.insert("ratio_spread".into(), quantile(&ratios, 0.95) - quantile(&ratios, 0.05));
                m.insert("mean_drop_per_n".into(), mean(&column(&ok, "drop_per_n")));
            }
            ExperimentId::Lambda0 => {
                let per_move: Vec<Vec<f64>> = ok
                    .iter()
                    .filter_map(|r| r.values.get("ratios").and_then(Value::as_array))
                    .map(|a| a.iter().filter_map(Value::as_f64).collect())
                    .collect();
                let first_kind: Vec<bool> = Context::outer_kinds(rank);
                let mut min_mean = f64::INFINITY;
                for (i, fk) in first_kind.iter().enumerate() {
                    let xs: Vec<f64> = per_move.iter().filter_map(|r| r.get(i).copied()).collect();
                    if !fk && !xs.is_empty() {
                        min_mean = min_mean.min(mean(&xs));
                    }
                }
                m.insert("min_mean_ratio".into(), min_mean);
                let mins = column(&ok, "min_second_kind");
                m.insert(
                    "min_sample_ratio".into(),
                    mins.iter().copied().fold(f64::INFINITY, f64::min),
                );
                m.insert("first_kind_exact_fraction".into(), fraction(&ok, "first_kind_exact"));
                m.insert("lambda0".into(), lambda0(rank));
            }
            ExperimentId::Adaptedness => {
                let key = if ok.iter().any(|r| r.values.contains_key("cauchy_distance")) {
                    "cauchy_distance"
                } else {
                    "distance"
                };
                let d = column(&ok, key);
                m.insert(format!("mean_{key}"), mean(&d));
                m.insert(format!("median_{key}"), median(&d));
                m.insert(format!("max_{key}"), d.iter().copied().fold(f64::NAN, f64::max));
            }
            ExperimentId::MinsetStability => {
                let sizes = column(&ok, "component_size");
                let steps = column(&ok, "steps");
                m.insert("component_p95".into(), quantile(&sizes, 0.95));
                m.insert("component_max".into(), sizes.iter().copied().fold(f64::NAN, f64::max));
                m.insert(
                    "steps_le_3_fraction".into(),
                    steps.iter().filter(|&&s| s <= 3.0).count() as f64 / all.len().max(1) as f64,
                );
                m.insert("mean_loops".into(), mean(&column(&ok, "stabilizer_loops")));
                m.insert("loops_fix_fraction".into(), fraction(&ok, "loops_fix_class"));
            }
            ExperimentId::EquivFuzz => {
                m.insert("detected_fraction".into(), fraction(&ok, "detected"));
                m.insert("verified_fraction".into(), fraction(&ok, "witness_verified"));
                m.insert(
                    "false_positives".into(),
                    ok.iter().filter(|r| r.bool("false_positive") == Some(true)).count() as f64,
                );
                m.insert(
                    "independent_equivalent".into(),
                    ok.iter()
                        .filter(|r| r.bool("independent_equivalent") == Some(true))
                        .count() as f64,
                );
                let rt: Vec<f64> = ok.iter().filter_map(|r| r.runtime_ns.map(|x| x as f64)).collect();
                m.insert("median_runtime_ns".into(), median(&rt));
            }
            ExperimentId::QuasiInversion => {
                let p = fraction(&ok, "event");
                let sigma = config_sigma(config);
                let bound = sigma.powi(n.isqrt() as i32);
                let t = ok.len().max(1) as f64;
                let stderr = (bound * (1.0 - bound) / t).sqrt();
                m.insert("frequency".into(), p);
                m.insert("events".into(), p * t);
                m.insert("bound".into(), bound);
                m.insert("stderr".into(), stderr);
                m.insert("within_bound".into(), f64::from(p <= bound + 3.0 * stderr));
            }
        }
        rows.push(SummaryRow {
            n,
            trials: all.len(),
            failed: all.len() - ok.len(),
            metrics: m,
            records: all.iter().map(|r| r.id.clone()).collect(),
        });
    }
    match config.experiment {
        ExperimentId::StrictMinimality => {
            let f: Vec<f64> = rows.iter().map(|r| r.metrics["strict_fraction"]).collect();
            global.insert("monotone".into(), f64::from(f.windows(2).all(|w| w[0] <= w[1])));
        }
        ExperimentId::Adaptedness => {
            let key = rows[0].metrics.keys().find(|k| k.starts_with("mean_")).cloned();
            if let Some(key) = key {
                let first = rows.first().map(|r| r.metrics[&key]).unwrap_or(f64::NAN);
                let last = rows.last().map(|r| r.metrics[&key]).unwrap_or(f64::NAN);
                global.insert("decreasing".into(), f64::from(last < first));
            }
        }
        ExperimentId::MinsetStability => {
            let first: Vec<f64> = records
                .iter()
                .filter(|r| r.n == config.lengths[0] && r.is_ok())
                .filter_map(|r| r.f64("component_size"))
                .collect();
            let k = quantile(&first, 0.95);
            global.insert("k".into(), k);
            for row in &mut rows {
                let sizes: Vec<f64> = records
                    .iter()
                    .filter(|r| r.n == row.n && r.is_ok())
                    .filter_map(|r| r.f64("component_size"))
                    .collect();
                let within = sizes.iter().filter(|&&s| s <= k).count() as f64 / row.trials.max(1) as f64;
                row.metrics.insert("within_k_fraction".into(), within);
            }
        }
        ExperimentId::EquivFuzz => {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| (r.n as f64, r.metrics["median_runtime_ns"]))
                .filter(|(_, y)| y.is_finite() && *y > 0.0)
                .collect();
            if pts.len() >= 2 {
                global.insert("runtime_slope".into(), log_log_slope(&pts));
            }
        }
        _ => {}
    }
    Summary {
        experiment: config.experiment,
        rows,
        global,
    }
}

fn config_sigma(config: &ExperimentConfig) -> f64 {
    Sampler::new(&config.sampler)
        .ok()
        .and_then(|s| s.directed().map(|d| d.gamma.chain.max_entry().to_f64()))
        .unwrap_or(f64::NAN)
}

impl Context {
    /// First-kind flags of the outer moves, in enumeration order.
    pub fn outer_kinds(rank: usize) -> Vec<bool> {
        MoveSet::new(rank)
            .map(|m| m.outer().map(|e| e.is_first_kind).collect())
            .unwrap_or_default()
    }
}
