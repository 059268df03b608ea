//! Seeded streaming generators: i.i.d. sources, LTI codings, AWGN channels,
//! block codings, prefix-conditioned sources and mixtures of ergodic components.
//!
//! Every random consumer draws from its own substream whose seed is derived
//! from the master seed and the consumer's position in the chain, so a stage
//! sees the same randomness no matter how much the others consume.

mod rng;
mod spec;

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use rng::{derive_seed, stream_rng, StreamRng};
pub use spec::{BlockMap, Component, Predicate, Root, SourceSpec, Stage, DEFAULT_CONDITION_BUDGET};

use crate::approx::SampleWindow;
use crate::dist::Law;
use crate::error::{Error, Result};

const IID_STREAM: u64 = 0;
const MIX_CHOICE: u64 = 0x6d69_785f_6368_6f69;
const MIX_OUTER: u64 = 0x6d69_785f_6f75_7465;

trait Stream: Send {
    fn next_value(&mut self) -> f64;
}

struct Iid {
    law: Law,
    rng: StreamRng,
}

impl Stream for Iid {
    fn next_value(&mut self) -> f64 {
        self.law.sample(&mut self.rng)
    }
}

struct Lti {
    coeffs: Vec<f64>,
    window: VecDeque<f64>,
    input: Box<dyn Stream>,
}

impl Stream for Lti {
    fn next_value(&mut self) -> f64 {
        let m = self.coeffs.len();
        while self.window.len() < m {
            self.window.push_back(self.input.next_value());
        }
        // window holds X_n .. X_{n+M-1}, oldest first
        let mut acc = 0.0;
        for (i, a) in self.coeffs.iter().enumerate() {
            acc += a * self.window[m - 1 - i];
        }
        self.window.pop_front();
        acc
    }
}

struct Awgn {
    sigma: f64,
    rng: StreamRng,
    input: Box<dyn Stream>,
}

impl Stream for Awgn {
    fn next_value(&mut self) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.input.next_value() + self.sigma * z
    }
}

struct Block {
    map: BlockMap,
    buffer: Vec<f64>,
    cursor: usize,
    input: Box<dyn Stream>,
}

impl Stream for Block {
    fn next_value(&mut self) -> f64 {
        if self.cursor == self.buffer.len() {
            for slot in self.buffer.iter_mut() {
                *slot = self.input.next_value();
            }
            self.map.apply(&mut self.buffer);
            self.cursor = 0;
        }
        self.cursor += 1;
        self.buffer[self.cursor - 1]
    }
}

/// Replays an accepted prefix, then continues the realization it came from.
struct Replay {
    prefix: VecDeque<f64>,
    input: Box<dyn Stream>,
}

impl Stream for Replay {
    fn next_value(&mut self) -> f64 {
        self.prefix
            .pop_front()
            .unwrap_or_else(|| self.input.next_value())
    }
}

struct Built {
    stream: Box<dyn Stream>,
    active: Option<usize>,
    attempts: u64,
}

fn build_root(root: &Root, seed: u64) -> Result<Built> {
    match root {
        Root::Iid(law) => Ok(Built {
            stream: Box::new(Iid {
                law: law.clone(),
                rng: stream_rng(derive_seed(seed, IID_STREAM)),
            }),
            active: None,
            attempts: 0,
        }),
        Root::Mixture(components) => {
            let index = choose_component(components, seed);
            // The component runs on the master seed itself, so the delegated
            // stream is literally the component's own stream.
            let inner = build(&components[index].spec, seed)?;
            Ok(Built {
                active: Some(index),
                ..inner
            })
        }
    }
}

fn choose_component(components: &[Component], seed: u64) -> usize {
    let u: f64 = stream_rng(derive_seed(seed, MIX_CHOICE)).random();
    let mut acc = 0.0;
    for (i, c) in components.iter().enumerate() {
        acc += c.weight;
        if u < acc {
            return i;
        }
    }
    components.len() - 1
}

fn stage_base(root: &Root, seed: u64) -> u64 {
    match root {
        Root::Iid(_) => seed,
        Root::Mixture(_) => derive_seed(seed, MIX_OUTER),
    }
}

fn build(spec: &SourceSpec, seed: u64) -> Result<Built> {
    build_prefix(&spec.root, &spec.stages, seed)
}

fn build_prefix(root: &Root, stages: &[Stage], seed: u64) -> Result<Built> {
    let Some((last, upstream)) = stages.split_last() else {
        return build_root(root, seed);
    };
    let index = stages.len() - 1;
    let stage_seed = derive_seed(stage_base(root, seed), index as u64 + 1);
    if let Stage::Condition {
        m,
        predicate,
        budget,
    } = last
    {
        let mut attempts = 0;
        for attempt in 0..*budget {
            // attempt 0 reuses the unconditioned realization
            let upstream_seed = if attempt == 0 {
                seed
            } else {
                derive_seed(stage_seed, attempt)
            };
            let mut inner = build_prefix(root, upstream, upstream_seed)?;
            attempts += inner.attempts + 1;
            let mut prefix: VecDeque<f64> = (0..*m).map(|_| inner.stream.next_value()).collect();
            if predicate.holds(prefix.make_contiguous()) {
                return Ok(Built {
                    stream: Box::new(Replay {
                        prefix,
                        input: inner.stream,
                    }),
                    active: inner.active,
                    attempts,
                });
            }
        }
        return Err(Error::ConditioningBudget { attempts: *budget });
    }
    let inner = build_prefix(root, upstream, seed)?;
    let stream: Box<dyn Stream> = match last {
        Stage::Lti(coeffs) => Box::new(Lti {
            coeffs: coeffs.clone(),
            window: VecDeque::with_capacity(coeffs.len()),
            input: inner.stream,
        }),
        Stage::Awgn { sigma } => Box::new(Awgn {
            sigma: *sigma,
            rng: stream_rng(stage_seed),
            input: inner.stream,
        }),
        Stage::Block { n, map } => Box::new(Block {
            map: map.clone(),
            buffer: vec![0.0; *n],
            cursor: *n,
            input: inner.stream,
        }),
        Stage::Condition { .. } => unreachable!("handled above"),
    };
    Ok(Built {
        stream,
        active: inner.active,
        attempts: inner.attempts,
    })
}

/// Direct sliding-window filter `Y_n = Σ_{i=1..M} a_i X_{n+M−i}` over a finite
/// input; the output has `input.len() − M + 1` entries (empty if the input is
/// shorter than the filter).
pub fn lti_filter(coeffs: &[f64], input: &[f64]) -> Vec<f64> {
    let m = coeffs.len();
    if m == 0 || input.len() < m {
        return Vec::new();
    }
    (0..=input.len() - m)
        .map(|n| {
            let mut acc = 0.0;
            for (i, a) in coeffs.iter().enumerate() {
                acc += a * input[n + m - 1 - i];
            }
            acc
        })
        .collect()
}

/// A deterministic, restartable sample stream described by a [`SourceSpec`].
pub struct ProcessSource {
    spec: SourceSpec,
    seed: u64,
    stream: Box<dyn Stream>,
    active: Option<usize>,
    attempts: u64,
    position: u64,
}

impl std::fmt::Debug for ProcessSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProcessSource")
            .field("spec", &self.spec.to_string())
            .field("seed", &self.seed)
            .field("active", &self.active)
            .field("position", &self.position)
            .finish()
    }
}

impl ProcessSource {
    pub fn new(spec: SourceSpec, seed: u64) -> Result<Self> {
        let built = build(&spec, seed)?;
        Ok(Self {
            spec,
            seed,
            stream: built.stream,
            active: built.active,
            attempts: built.attempts,
            position: 0,
        })
    }

    pub fn iid(law: Law, seed: u64) -> Self {
        Self::new(SourceSpec::iid(law), seed).expect("i.i.d. sources always build")
    }

    /// Same seed, one more stage at the end of the chain.
    pub fn with_stage(self, stage: Stage) -> Result<Self> {
        Self::new(self.spec.then(stage), self.seed)
    }

    pub fn next_sample(&mut self) -> f64 {
        self.position += 1;
        self.stream.next_value()
    }

    pub fn take(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_sample()).collect()
    }

    /// Next `n` samples as a window; `n` must be positive.
    pub fn window(&mut self, n: usize) -> Result<SampleWindow<f64>> {
        if n == 0 {
            return Err(Error::invalid("n", "window length must be at least 1"));
        }
        SampleWindow::new(self.take(n))
    }

    /// Back to position 0 with the same future.
    pub fn reset(&mut self) {
        let built = build(&self.spec, self.seed).expect("spec built once already");
        self.stream = built.stream;
        self.active = built.active;
        self.attempts = built.attempts;
        self.position = 0;
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    /// Index of the mixture component drawn at time zero, if the root is a mixture.
    pub fn active_component(&self) -> Option<usize> {
        self.active
    }

    /// Total rejection attempts spent building the stream (0 without conditioning).
    pub fn condition_attempts(&self) -> u64 {
        self.attempts
    }

    /// Exact stationary marginal of the realized stream when known: the
    /// declared law of the chain, or of the active component for mixtures.
    pub fn declared_law(&self) -> Option<&Law> {
        match &self.spec.root {
            Root::Iid(_) => self.spec.declared_law(),
            Root::Mixture(components) => {
                let outer = SourceSpec {
                    root: Root::Iid(Law::gaussian(1.0).expect("valid")),
                    stages: self.spec.stages.clone(),
                };
                outer.declared_law()?;
                components[self.active?].spec.declared_law()
            }
        }
    }
}
