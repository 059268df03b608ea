//! Structured description of a generation chain and its textual grammar.
//!
//! Stages are joined by `|`; the first stage is the source:
//!
//! ```text
//! iid:student_t:q=2.1 | lti:1,1,1,1,1 | awgn:sigma=0.1
//! iid:gaussian:sigma=1 | block:n=4;map=zero_tail:1
//! iid:gaussian:sigma=1 | cond:m=1;pred=prefix_abs_below:0.5
//! mix:[0.4 iid:gaussian:sigma=1 ; 0.6 iid:student_t:q=1.2]
//! ```

use std::fmt;
use std::str::FromStr;

use crate::dist::Law;
use crate::error::{Error, Result};

/// Default number of rejection attempts for conditioned sources.
pub const DEFAULT_CONDITION_BUDGET: u64 = 1_000_000;

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Per-block map of a block coding.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockMap {
    Reverse,
    /// Sort the block in decreasing order of value.
    SortDesc,
    /// Keep the `k` largest magnitudes (earlier index wins ties), zero the rest.
    ZeroTail(usize),
}

impl BlockMap {
    pub fn apply(&self, block: &mut [f64]) {
        match self {
            BlockMap::Reverse => block.reverse(),
            BlockMap::SortDesc => block.sort_by(|a, b| b.total_cmp(a)),
            BlockMap::ZeroTail(k) => {
                let mut order: Vec<usize> = (0..block.len()).collect();
                order.sort_by(|&a, &b| block[b].abs().total_cmp(&block[a].abs()));
                for &i in order.iter().skip(*k) {
                    block[i] = 0.0;
                }
            }
        }
    }
}

impl fmt::Display for BlockMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockMap::Reverse => write!(f, "reverse"),
            BlockMap::SortDesc => write!(f, "sort_desc"),
            BlockMap::ZeroTail(k) => write!(f, "zero_tail:{k}"),
        }
    }
}

/// Cylinder predicate on the first `m` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Always,
    /// Every `|x_i| < c` for `i ≤ m`.
    PrefixAbsBelow(f64),
    /// Every `|x_i| > c` for `i ≤ m`.
    PrefixAbsAbove(f64),
}

impl Predicate {
    pub fn holds(&self, prefix: &[f64]) -> bool {
        match self {
            Predicate::Always => true,
            Predicate::PrefixAbsBelow(c) => prefix.iter().all(|x| x.abs() < *c),
            Predicate::PrefixAbsAbove(c) => prefix.iter().all(|x| x.abs() > *c),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Always => write!(f, "always"),
            Predicate::PrefixAbsBelow(c) => write!(f, "prefix_abs_below:{c}"),
            Predicate::PrefixAbsAbove(c) => write!(f, "prefix_abs_above:{c}"),
        }
    }
}

/// A transformation applied to the stream produced by the previous stages.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    /// `Y_n = Σ_{i=1..M} a_i X_{n+M−i}`.
    Lti(Vec<f64>),
    /// `Y_i = X_i + Z_i` with `Z_i ~ N(0, sigma²)` i.i.d.
    Awgn { sigma: f64 },
    /// Non-overlapping blocks of length `n` mapped by `map`.
    Block { n: usize, map: BlockMap },
    /// Rejection sampling of the upstream until `predicate` holds on its first `m` values.
    Condition {
        m: usize,
        predicate: Predicate,
        budget: u64,
    },
}

impl Stage {
    pub fn lti(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid(
                "coeffs",
                "need at least one LTI coefficient",
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("coeffs", "LTI coefficients must be finite"));
        }
        Ok(Stage::Lti(coeffs))
    }

    pub fn awgn(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(
                "sigma",
                format!("noise level must be positive, got {sigma}"),
            ));
        }
        Ok(Stage::Awgn { sigma })
    }

    pub fn block(n: usize, map: BlockMap) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(
                "n",
                format!("block length must be at least 2, got {n}"),
            ));
        }
        if let BlockMap::ZeroTail(k) = map {
            if k > n {
                return Err(Error::invalid(
                    "map",
                    format!("zero_tail keeps {k} entries of a block of {n}"),
                ));
            }
        }
        Ok(Stage::Block { n, map })
    }

    pub fn condition(m: usize, predicate: Predicate, budget: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m", "prefix length must be at least 1"));
        }
        if budget == 0 {
            return Err(Error::invalid("budget", "must be at least 1"));
        }
        if let Predicate::PrefixAbsBelow(c) | Predicate::PrefixAbsAbove(c) = predicate {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::invalid(
                    "pred",
                    format!("threshold must be nonnegative, got {c}"),
                ));
            }
        }
        Ok(Stage::Condition {
            m,
            predicate,
            budget,
        })
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Lti(c) => {
                write!(f, "lti:")?;
                for (i, a) in c.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                Ok(())
            }
            Stage::Awgn { sigma } => write!(f, "awgn:sigma={sigma}"),
            Stage::Block { n, map } => write!(f, "block:n={n};map={map}"),
            Stage::Condition {
                m,
                predicate,
                budget,
            } => {
                write!(f, "cond:m={m};pred={predicate}")?;
                if *budget != DEFAULT_CONDITION_BUDGET {
                    write!(f, ";budget={budget}")?;
                }
                Ok(())
            }
        }
    }
}

/// Where the first sample comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Root {
    Iid(Law),
    /// Ergodic components with weights; one is drawn at time zero.
    Mixture(Vec<Component>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub spec: SourceSpec,
}

/// Full generation chain: a root followed by zero or more stages.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub root: Root,
    pub stages: Vec<Stage>,
}

impl SourceSpec {
    pub fn iid(law: Law) -> Self {
        Self {
            root: Root::Iid(law),
            stages: Vec::new(),
        }
    }

    pub fn mixture(components: Vec<(f64, SourceSpec)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid(
                "components",
                "mixture needs at least one component",
            ));
        }
        if components.iter().any(|(w, _)| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid(
                "weights",
                "mixture weights must be positive",
            ));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::invalid(
                "weights",
                format!("mixture weights must sum to 1, got {total}"),
            ));
        }
        Ok(Self {
            root: Root::Mixture(
                components
                    .into_iter()
                    .map(|(weight, spec)| Component { weight, spec })
                    .collect(),
            ),
            stages: Vec::new(),
        })
    }

    /// Appends a stage.
    pub fn then(mut self, stage: Stage) -> Self {
        self.stages.push(stage);
        self
    }

    /// Law of the one-dimensional stationary marginal when it is known exactly:
    /// plain i.i.d. chains, optionally followed by conditioning or
    /// multiset-preserving block maps.
    pub fn declared_law(&self) -> Option<&Law> {
        let Root::Iid(law) = &self.root else {
            return None;
        };
        let preserves = self.stages.iter().all(|s| {
            matches!(
                s,
                Stage::Condition { .. }
                    | Stage::Block {
                        map: BlockMap::Reverse | BlockMap::SortDesc,
                        ..
                    }
            )
        });
        preserves.then_some(law)
    }
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.root {
            Root::Iid(law) => write!(f, "iid:{law}")?,
            Root::Mixture(components) => {
                write!(f, "mix:[")?;
                for (i, c) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ; ")?;
                    }
                    write!(f, "{} {}", c.weight, c.spec)?;
                }
                write!(f, "]")?;
            }
        }
        for stage in &self.stages {
            write!(f, " | {stage}")?;
        }
        Ok(())
    }
}

/// Splits on `sep` outside square brackets.
fn split_top_level(s: &str, sep: char) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::parse(&s[..=i], "unbalanced `]`"));
                }
            }
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(Error::parse(s, "unbalanced `[`"));
    }
    parts.push(&s[start..]);
    Ok(parts)
}

fn key_values(params: &str) -> Result<Vec<(&str, &str)>> {
    params
        .split(';')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::parse(kv.trim(), "expected key=value"))
        })
        .collect()
}

fn integer(token: &str) -> Result<usize> {
    token
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::parse(token.trim(), "not a nonnegative integer"))
}

fn number(token: &str) -> Result<f64> {
    crate::dist::parse_number(token)
}

fn wrap(token: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Parse { .. } => e,
        other => Error::parse(token, other.to_string()),
    }
}

fn parse_block_map(s: &str) -> Result<BlockMap> {
    match s.split_once(':') {
        None if s == "reverse" => Ok(BlockMap::Reverse),
        None if s == "sort_desc" => Ok(BlockMap::SortDesc),
        Some(("zero_tail", k)) => Ok(BlockMap::ZeroTail(integer(k)?)),
        _ => Err(Error::parse(
            s,
            "unknown block map (reverse, sort_desc, zero_tail:k)",
        )),
    }
}

fn parse_predicate(s: &str) -> Result<Predicate> {
    match s.split_once(':') {
        None if s == "always" => Ok(Predicate::Always),
        Some(("prefix_abs_below", c)) => Ok(Predicate::PrefixAbsBelow(number(c)?)),
        Some(("prefix_abs_above", c)) => Ok(Predicate::PrefixAbsAbove(number(c)?)),
        _ => Err(Error::parse(
            s,
            "unknown predicate (always, prefix_abs_below:c, prefix_abs_above:c)",
        )),
    }
}

fn parse_stage(token: &str) -> Result<Stage> {
    let (kind, params) = token
        .split_once(':')
        .ok_or_else(|| Error::parse(token, "expected <stage>:<parameters>"))?;
    match kind.trim() {
        "lti" => {
            let coeffs = params.split(',').map(number).collect::<Result<Vec<_>>>()?;
            Stage::lti(coeffs).map_err(wrap(token))
        }
        "awgn" => {
            let kv = key_values(params)?;
            match kv.as_slice() {
                [("sigma", v)] => Stage::awgn(number(v)?).map_err(wrap(token)),
                _ => Err(Error::parse(params, "expected sigma=<value>")),
            }
        }
        "block" => {
            let (mut n, mut map) = (None, None);
            for (k, v) in key_values(params)? {
                match k {
                    "n" => n = Some(integer(v)?),
                    "map" => map = Some(parse_block_map(v)?),
                    other => return Err(Error::parse(other, "unknown block parameter")),
                }
            }
            let n = n.ok_or_else(|| Error::parse(token, "block needs n=<length>"))?;
            let map = map.ok_or_else(|| Error::parse(token, "block needs map=<id>"))?;
            Stage::block(n, map).map_err(wrap(token))
        }
        "cond" => {
            let (mut m, mut pred, mut budget) = (None, None, DEFAULT_CONDITION_BUDGET);
            for (k, v) in key_values(params)? {
                match k {
                    "m" => m = Some(integer(v)?),
                    "pred" => pred = Some(parse_predicate(v)?),
                    "budget" => budget = integer(v)? as u64,
                    other => return Err(Error::parse(other, "unknown cond parameter")),
                }
            }
            let m = m.ok_or_else(|| Error::parse(token, "cond needs m=<length>"))?;
            let pred = pred.ok_or_else(|| Error::parse(token, "cond needs pred=<id>"))?;
            Stage::condition(m, pred, budget).map_err(wrap(token))
        }
        other => Err(Error::parse(
            other,
            "unknown stage (lti, awgn, block, cond)",
        )),
    }
}

fn parse_mixture(body: &str) -> Result<SourceSpec> {
    // `;` also separates parameters inside laws and stages, so a piece that
    // does not start with a weight belongs to the previous component.
    let mut pieces: Vec<String> = Vec::new();
    for piece in split_top_level(body, ';')? {
        let starts_with_weight = piece
            .split_whitespace()
            .next()
            .is_some_and(|w| w.parse::<f64>().is_ok())
            && piece.split_whitespace().nth(1).is_some();
        match pieces.last_mut() {
            Some(last) if !starts_with_weight => {
                last.push(';');
                last.push_str(piece);
            }
            _ => pieces.push(piece.to_string()),
        }
    }
    let mut components = Vec::with_capacity(pieces.len());
    for piece in &pieces {
        let piece = piece.trim();
        let (w, rest) = piece
            .split_once(char::is_whitespace)
            .ok_or_else(|| Error::parse(piece, "expected `<weight> <chain>`"))?;
        components.push((number(w)?, rest.trim().parse::<SourceSpec>()?));
    }
    SourceSpec::mixture(components).map_err(wrap(body))
}

impl FromStr for SourceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lowered = s.trim().to_ascii_lowercase();
        let parts = split_top_level(&lowered, '|')?;
        let head = parts[0].trim();
        let mut spec = if let Some(law) = head.strip_prefix("iid:") {
            SourceSpec::iid(law.parse()?)
        } else if let Some(rest) = head.strip_prefix("mix:") {
            let body = rest
                .trim()
                .strip_prefix('[')
                .and_then(|b| b.strip_suffix(']'))
                .ok_or_else(|| Error::parse(rest, "mixture must be written mix:[...]"))?;
            parse_mixture(body)?
        } else {
            return Err(Error::parse(
                head,
                "chain must start with iid:<law> or mix:[...]",
            ));
        };
        for part in &parts[1..] {
            spec.stages.push(parse_stage(part.trim())?);
        }
        Ok(spec)
    }
}
