//! Line-oriented trajectory logs.
//!
//! ```text
//! flawwalk-trace 1
//! walk permutation
//! seed 7
//! flaws f1 f2
//! init digest=0 present=f1,f2
//! step 1 flaw=f1 parent=- digest=2 present=f2
//! step 2 flaw=f2 parent=- digest=3 present=-
//! outcome sink
//! ```
//!
//! `flaws` lists every flaw mentioned in the log, greatest first; inside a
//! parsed log a flaw is identified by its position there, so id 0 is the
//! greatest. Step indices and parents count from 1. `present` lists flaws
//! greatest first, `-` when empty. Descriptors contain no whitespace or
//! commas.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{FlawOrder, Instance};
use crate::walks::{Outcome, Trajectory, WalkKind};

const MAGIC: &str = "flawwalk-trace 1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub flaw: usize,
    /// 0-based index of the spawning step.
    pub parent: Option<usize>,
    pub digest: u64,
    pub present: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceLog {
    pub kind: WalkKind,
    pub seed: u64,
    /// Flaw descriptors, greatest first.
    pub flaws: Vec<String>,
    pub initial_digest: u64,
    pub initial_present: Vec<usize>,
    pub steps: Vec<TraceStep>,
    pub outcome: Outcome,
}

impl TraceLog {
    /// Interns the flaws of a fully recorded trajectory.
    pub fn from_trajectory<I: Instance>(inst: &I, traj: &Trajectory<I::State, I::Flaw>) -> Result<Self> {
        let not_full = || Error::PreconditionFailed("trajectory was not fully recorded".into());
        let initial_present = traj.initial_present.as_ref().ok_or_else(not_full)?;
        let mut seen: HashSet<&I::Flaw> = initial_present.iter().collect();
        for s in &traj.steps {
            seen.insert(&s.flaw);
            seen.extend(s.present.as_ref().ok_or_else(not_full)?.iter());
        }
        let mut flaws: Vec<&I::Flaw> = seen.into_iter().collect();
        flaws.sort_by(|a, b| inst.priority(b, a));
        let ids: HashMap<&I::Flaw, usize> = flaws.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let intern = |v: &[I::Flaw]| v.iter().map(|f| ids[f]).collect::<Vec<_>>();
        let steps = traj
            .steps
            .iter()
            .map(|s| TraceStep {
                flaw: ids[&s.flaw],
                parent: s.parent,
                digest: inst.digest(s.state.as_ref().expect("full recording")),
                present: intern(s.present.as_deref().expect("full recording")),
            })
            .collect();
        Ok(Self {
            kind: traj.kind,
            seed: traj.seed,
            flaws: flaws.iter().map(|f| inst.describe_flaw(f)).collect(),
            initial_digest: inst.digest(&traj.initial),
            initial_present: intern(initial_present),
            steps,
            outcome: traj.outcome,
        })
    }

    /// The order of interned ids: id 0 is the greatest.
    pub fn order(&self) -> FlawOrder {
        FlawOrder::identity(self.flaws.len())
    }

    pub fn witness(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.flaw).collect()
    }

    /// `U(σ_1), …, U(σ_{t+1})`.
    pub fn present_sets(&self) -> Vec<&[usize]> {
        std::iter::once(self.initial_present.as_slice())
            .chain(self.steps.iter().map(|s| s.present.as_slice()))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(|&f| self.flaws[f].as_str()).collect::<Vec<_>>().join(",")
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "walk {}", self.kind.as_str());
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "{}", format!("flaws {}", self.flaws.join(" ")).trim_end());
        let _ = writeln!(
            out,
            "init digest={} present={}",
            self.initial_digest,
            list(&self.initial_present)
        );
        for (i, s) in self.steps.iter().enumerate() {
            let parent = s.parent.map_or("-".to_string(), |p| (p + 1).to_string());
            let _ = writeln!(
                out,
                "step {} flaw={} parent={parent} digest={} present={}",
                i + 1,
                self.flaws[s.flaw],
                s.digest,
                list(&s.present)
            );
        }
        let _ = writeln!(out, "outcome {}", self.outcome.as_str());
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut expect = |key: &str| -> Result<(usize, String)> {
            let (line, l) = lines
                .next()
                .ok_or_else(|| err(0, format!("missing `{key}` line")))?;
            match l.strip_prefix(key) {
                Some(rest) if key == MAGIC || rest.is_empty() || rest.starts_with(' ') => Ok((line, rest.trim().to_string())),
                _ => Err(err(line, format!("expected `{key}`"))),
            }
        };
        expect(MAGIC)?;
        let (line, kind) = expect("walk")?;
        let kind = WalkKind::parse(&kind).ok_or_else(|| err(line, format!("unknown walk {kind}")))?;
        let (line, seed) = expect("seed")?;
        let seed = seed.parse().map_err(|_| err(line, format!("bad seed {seed}")))?;
        let (_, flaws) = expect("flaws")?;
        let flaws: Vec<String> = flaws.split_whitespace().map(str::to_string).collect();
        let ids: HashMap<&str, usize> = flaws.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect();
        let lookup = |line: usize, tok: &str| {
            ids.get(tok)
                .copied()
                .ok_or_else(|| err(line, format!("unknown flaw {tok}")))
        };
        let list = |line: usize, tok: &str| -> Result<Vec<usize>> {
            if tok == "-" {
                return Ok(Vec::new());
            }
            tok.split(',').map(|t| lookup(line, t)).collect()
        };
        let fields = |line: usize, rest: &str, keys: &[&str]| -> Result<Vec<String>> {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != keys.len() {
                return Err(err(line, format!("expected fields {}", keys.join(" "))));
            }
            toks.iter()
                .zip(keys)
                .map(|(t, k)| {
                    t.strip_prefix(k)
                        .and_then(|v| v.strip_prefix('='))
                        .map(str::to_string)
                        .ok_or_else(|| err(line, format!("expected {k}=")))
                })
                .collect()
        };
        let (line, init) = expect("init")?;
        let f = fields(line, &init, &["digest", "present"])?;
        let initial_digest = f[0].parse().map_err(|_| err(line, "bad digest".into()))?;
        let initial_present = list(line, &f[1])?;

        let mut steps = Vec::new();
        let outcome = loop {
            let (line, l) = lines.next().ok_or_else(|| err(0, "missing outcome line".into()))?;
            if let Some(rest) = l.strip_prefix("outcome ") {
                break match rest.trim() {
                    "sink" => Outcome::Sink,
                    "budget" => Outcome::BudgetExhausted,
                    other => return Err(err(line, format!("unknown outcome {other}"))),
                };
            }
            let rest = l
                .strip_prefix("step ")
                .ok_or_else(|| err(line, "expected `step` or `outcome`".into()))?;
            let (index, rest) = rest.trim().split_once(' ').unwrap_or((rest, ""));
            if index.parse::<usize>().ok() != Some(steps.len() + 1) {
                return Err(err(line, format!("step index {index} out of sequence")));
            }
            let f = fields(line, rest, &["flaw", "parent", "digest", "present"])?;
            let parent = match f[1].as_str() {
                "-" => None,
                p => {
                    let p: usize = p.parse().map_err(|_| err(line, format!("bad parent {p}")))?;
                    if p == 0 || p > steps.len() {
                        return Err(err(line, format!("parent {p} is not an earlier step")));
                    }
                    Some(p - 1)
                }
            };
            steps.push(TraceStep {
                flaw: lookup(line, &f[0])?,
                parent,
                digest: f[2].parse().map_err(|_| err(line, "bad digest".into()))?,
                present: list(line, &f[3])?,
            });
        };
        if let Some((line, _)) = lines.next() {
            return Err(err(line, "content after outcome".into()));
        }
        Ok(Self {
            kind,
            seed,
            flaws,
            initial_digest,
            initial_present,
            steps,
            outcome,
        })
    }
}
