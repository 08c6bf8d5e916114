//! Door configurations and knock sequences.
//!
//! Doors are indexed from 0 inside the library. Files and the command line use
//! 1-based indices; [`format_knocks`] and [`parse_knocks`] convert.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionKind, FundamentalDistribution};
use crate::error::{Error, Result, Violation};

/// Dependency structure as written in a configuration file.
///
/// `Dag` lists, for each door, the 1-based indices of the doors it waits for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dependency {
    Independent,
    Cascading,
    Dag(Vec<Vec<usize>>),
}

impl Dependency {
    pub fn name(&self) -> &'static str {
        match self {
            Dependency::Independent => "independent",
            Dependency::Cascading => "cascading",
            Dependency::Dag(_) => "dag",
        }
    }
}

/// Unvalidated configuration, exactly as deserialized from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSpec {
    pub doors: Vec<DistributionKind>,
    pub dependency: Dependency,
}

impl ConfigSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfiguration(vec![Violation::global(e.to_string())]))
    }

    /// Every invariant violation, in door order.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.doors.is_empty() {
            out.push(Violation::global("d ≥ 1 required"));
        }
        for (i, kind) in self.doors.iter().enumerate() {
            if let Err(msg) = kind.check() {
                out.push(Violation::at_door(i + 1, msg));
            }
        }
        if let Dependency::Dag(preds) = &self.dependency {
            if preds.len() != self.doors.len() {
                out.push(Violation::global(format!(
                    "dag lists {} predecessor sets for {} doors",
                    preds.len(),
                    self.doors.len()
                )));
            }
            for (i, set) in preds.iter().enumerate() {
                let door = i + 1;
                for &j in set {
                    if j == 0 {
                        out.push(Violation::at_door(door, "predecessor index 0 (indices are 1-based)"));
                    } else if j >= door {
                        out.push(Violation::at_door(
                            door,
                            format!("self/forward reference to door {j}; predecessors must have lower index"),
                        ));
                    }
                }
                let mut sorted = set.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    out.push(Violation::at_door(door, "duplicate predecessor"));
                }
            }
        }
        out
    }

    pub fn build(&self) -> Result<DoorConfiguration> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidConfiguration(violations));
        }
        let doors = self
            .doors
            .iter()
            .cloned()
            .map(FundamentalDistribution::new)
            .collect::<Result<Vec<_>>>()?;
        DoorConfiguration::new(doors, self.dependency.clone())
    }
}

/// A validated system of `d` doors.
#[derive(Debug, Clone, PartialEq)]
pub struct DoorConfiguration {
    doors: Vec<FundamentalDistribution>,
    dependency: Dependency,
    /// 0-based predecessor sets, sorted.
    predecessors: Vec<Vec<usize>>,
}

impl DoorConfiguration {
    pub fn new(doors: Vec<FundamentalDistribution>, dependency: Dependency) -> Result<Self> {
        let spec = ConfigSpec {
            doors: doors.iter().map(|d| d.kind().clone()).collect(),
            dependency: dependency.clone(),
        };
        let violations = spec.validate();
        if !violations.is_empty() {
            return Err(Error::InvalidConfiguration(violations));
        }
        let d = doors.len();
        let predecessors = match &dependency {
            Dependency::Independent => vec![Vec::new(); d],
            Dependency::Cascading => (0..d).map(|i| if i == 0 { vec![] } else { vec![i - 1] }).collect(),
            Dependency::Dag(sets) => sets
                .iter()
                .map(|s| {
                    let mut v: Vec<usize> = s.iter().map(|j| j - 1).collect();
                    v.sort_unstable();
                    v
                })
                .collect(),
        };
        Ok(Self {
            doors,
            dependency,
            predecessors,
        })
    }

    pub fn independent(doors: Vec<FundamentalDistribution>) -> Result<Self> {
        Self::new(doors, Dependency::Independent)
    }

    pub fn cascading(doors: Vec<FundamentalDistribution>) -> Result<Self> {
        Self::new(doors, Dependency::Cascading)
    }

    /// DAG-gated configuration from 0-based predecessor sets.
    pub fn dag(doors: Vec<FundamentalDistribution>, predecessors: Vec<Vec<usize>>) -> Result<Self> {
        let one_based = predecessors
            .into_iter()
            .map(|s| s.into_iter().map(|j| j + 1).collect())
            .collect();
        Self::new(doors, Dependency::Dag(one_based))
    }

    /// Same doors under a different dependency structure.
    pub fn with_dependency(&self, dependency: Dependency) -> Result<Self> {
        Self::new(self.doors.clone(), dependency)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        ConfigSpec::from_json(text)?.build()
    }

    pub fn door_count(&self) -> usize {
        self.doors.len()
    }

    pub fn doors(&self) -> &[FundamentalDistribution] {
        &self.doors
    }

    pub fn door(&self, i: usize) -> &FundamentalDistribution {
        &self.doors[i]
    }

    pub fn dependency(&self) -> &Dependency {
        &self.dependency
    }

    /// 0-based doors that must be open before knocks on door `i` count.
    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.predecessors[i]
    }

    pub fn predecessor_sets(&self) -> &[Vec<usize>] {
        &self.predecessors
    }

    /// True when no door waits for another.
    pub fn is_independent(&self) -> bool {
        self.predecessors.iter().all(Vec::is_empty)
    }

    /// True when every door `i > 0` waits exactly for door `i - 1`.
    pub fn is_chain(&self) -> bool {
        self.predecessors
            .iter()
            .enumerate()
            .all(|(i, p)| if i == 0 { p.is_empty() } else { p.as_slice() == [i - 1] })
    }

    pub fn to_spec(&self) -> ConfigSpec {
        ConfigSpec {
            doors: self.doors.iter().map(|d| d.kind().clone()).collect(),
            dependency: self.dependency.clone(),
        }
    }
}

/// Source of an infinite knock stream. Each call to [`KnockGenerator::start`]
/// restarts from the first knock.
pub trait KnockGenerator: fmt::Debug + Send + Sync {
    fn start(&self) -> Box<dyn Iterator<Item = usize> + '_>;

    /// Short label used in diagnostics.
    fn name(&self) -> &str;
}

#[derive(Debug, Clone)]
enum Source {
    Finite(Vec<usize>),
    Periodic { prefix: Vec<usize>, cycle: Vec<usize> },
    Generated(Arc<dyn KnockGenerator>),
}

/// A deterministic, possibly infinite, sequence of door knocks.
#[derive(Debug, Clone)]
pub struct KnockSequence {
    doors: usize,
    source: Source,
}

impl KnockSequence {
    pub fn finite(doors: usize, knocks: Vec<usize>) -> Result<Self> {
        check_indices(doors, &knocks)?;
        Ok(Self {
            doors,
            source: Source::Finite(knocks),
        })
    }

    /// `prefix` followed by `cycle` repeated forever.
    pub fn periodic(doors: usize, prefix: Vec<usize>, cycle: Vec<usize>) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidSequence("repeated block must be non-empty".into()));
        }
        check_indices(doors, &prefix)?;
        check_indices(doors, &cycle)?;
        Ok(Self {
            doors,
            source: Source::Periodic { prefix, cycle },
        })
    }

    pub fn repeat(doors: usize, cycle: Vec<usize>) -> Result<Self> {
        Self::periodic(doors, Vec::new(), cycle)
    }

    /// Wraps a lazy generator. Indices it yields are checked while iterating.
    pub fn generated(doors: usize, generator: Arc<dyn KnockGenerator>) -> Self {
        Self {
            doors,
            source: Source::Generated(generator),
        }
    }

    pub fn door_count(&self) -> usize {
        self.doors
    }

    /// Number of knocks for finite sequences, `None` for infinite ones.
    pub fn len(&self) -> Option<usize> {
        match &self.source {
            Source::Finite(k) => Some(k.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn is_finite(&self) -> bool {
        self.len().is_some()
    }

    pub fn iter(&self) -> Knocks<'_> {
        let inner: Box<dyn Iterator<Item = usize> + '_> = match &self.source {
            Source::Finite(k) => Box::new(k.iter().copied()),
            Source::Periodic { prefix, cycle } => Box::new(prefix.iter().copied().chain(cycle.iter().copied().cycle())),
            Source::Generated(g) => g.start(),
        };
        Knocks {
            inner,
            doors: self.doors,
        }
    }

    /// The first `n` knocks, or fewer if the sequence is shorter.
    pub fn prefix(&self, n: usize) -> Vec<usize> {
        self.iter().take(n).collect()
    }

    pub fn label(&self) -> String {
        match &self.source {
            Source::Finite(k) => format!("finite({})", k.len()),
            Source::Periodic { cycle, .. } => format!("periodic({})", cycle.len()),
            Source::Generated(g) => g.name().to_string(),
        }
    }
}

/// Iterator over the knocks of a [`KnockSequence`].
pub struct Knocks<'a> {
    inner: Box<dyn Iterator<Item = usize> + 'a>,
    doors: usize,
}

impl Iterator for Knocks<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let door = self.inner.next()?;
        assert!(door < self.doors, "generator produced door {door} for {} doors", self.doors);
        Some(door)
    }
}

fn check_indices(doors: usize, knocks: &[usize]) -> Result<()> {
    if doors == 0 {
        return Err(Error::InvalidSequence("sequence needs at least one door".into()));
    }
    match knocks.iter().find(|&&k| k >= doors) {
        Some(k) => Err(Error::InvalidSequence(format!(
            "knock on door {} but only {doors} doors exist",
            k + 1
        ))),
        None => Ok(()),
    }
}

/// Prefix counts `pi_i(t)`: knocks on each door among the first `t`.
pub fn prefix_counts(doors: usize, knocks: &[usize]) -> Vec<u64> {
    let mut counts = vec![0u64; doors];
    for &k in knocks {
        counts[k] += 1;
    }
    counts
}

/// Renders 0-based knocks as a comma-separated 1-based line.
pub fn format_knocks(knocks: &[usize]) -> String {
    knocks.iter().map(|k| (k + 1).to_string()).collect::<Vec<_>>().join(",")
}

/// Parses a comma-separated list of 1-based door indices.
pub fn parse_knocks(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::InvalidSequence(format!("bad door index {s:?}"))),
            Ok(k) => Ok(k - 1),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(p: f64) -> FundamentalDistribution {
        FundamentalDistribution::geometric(p).unwrap()
    }

    #[test]
    fn cascading_two_geometric_is_valid() {
        let spec = ConfigSpec::from_json(
            r#"{"doors":[{"kind":"geometric","p":0.5},{"kind":"geometric","p":0.5}],"dependency":"cascading"}"#,
        )
        .unwrap();
        assert!(spec.validate().is_empty());
        let config = spec.build().unwrap();
        assert!(config.is_chain());
        assert_eq!(config.predecessors(1), &[0]);
    }

    #[test]
    fn forward_reference_is_reported() {
        let spec = ConfigSpec::from_json(
            r#"{"doors":[{"kind":"geometric","p":0.5},{"kind":"geometric","p":0.5}],"dependency":{"dag":[[],[2]]}}"#,
        )
        .unwrap();
        let v = spec.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].door, Some(2));
        assert!(v[0].message.contains("self/forward reference"), "{}", v[0]);
    }

    #[test]
    fn empty_door_list_is_reported() {
        let spec = ConfigSpec {
            doors: vec![],
            dependency: Dependency::Independent,
        };
        let v = spec.validate();
        assert_eq!(v, vec![Violation::global("d ≥ 1 required")]);
        assert!(spec.build().is_err());
    }

    #[test]
    fn all_violations_are_listed() {
        let spec = ConfigSpec::from_json(
            r#"{"doors":[{"kind":"geometric","p":1.5},{"kind":"polynomial","c":1.0,"a":0.5},{"kind":"deterministic","k":2}],
                "dependency":{"dag":[[1],[],[3,0]]}}"#,
        )
        .unwrap();
        let v = spec.validate();
        assert_eq!(v.len(), 5, "{v:?}");
    }

    #[test]
    fn special_cases_of_dag() {
        let doors = vec![geo(0.5), geo(0.3), geo(0.2)];
        let ind = DoorConfiguration::dag(doors.clone(), vec![vec![], vec![], vec![]]).unwrap();
        assert!(ind.is_independent());
        let chain = DoorConfiguration::dag(doors.clone(), vec![vec![], vec![0], vec![1]]).unwrap();
        assert!(chain.is_chain());
        assert_eq!(chain.predecessor_sets(), DoorConfiguration::cascading(doors).unwrap().predecessor_sets());
    }

    #[test]
    fn sequences_and_prefix_counts() {
        let seq = KnockSequence::periodic(3, vec![0, 0], vec![1, 2]).unwrap();
        let p = seq.prefix(7);
        assert_eq!(p, vec![0, 0, 1, 2, 1, 2, 1]);
        let counts = prefix_counts(3, &p);
        assert_eq!(counts, vec![2, 3, 2]);
        assert_eq!(counts.iter().sum::<u64>(), 7);
        assert!(KnockSequence::finite(2, vec![0, 2]).is_err());
        assert!(KnockSequence::repeat(2, vec![]).is_err());
        let clone = seq.clone();
        assert_eq!(clone.prefix(3), seq.prefix(3));
    }

    #[test]
    fn knock_text_round_trip() {
        let k = parse_knocks("1, 2,1,3").unwrap();
        assert_eq!(k, vec![0, 1, 0, 2]);
        assert_eq!(format_knocks(&k), "1,2,1,3");
        assert!(parse_knocks("1,0").is_err());
        assert!(parse_knocks("x").is_err());
    }
}
