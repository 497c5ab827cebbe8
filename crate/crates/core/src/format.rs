//! Line-oriented text format for explicit instances.
//!
//! ```text
//! # comments and blank lines are ignored
//! instance toy-a
//! states 00 01 10 11           # state labels, in index order
//! mu 0.25 0.25 0.25 0.25       # optional, defaults to uniform
//! theta 0.25 0.25 0.25 0.25    # optional, defaults to mu
//! flaw f1 00 01                # flaw name, then member states
//! flaw f2 00 10
//! order f1 f2                  # optional flaw order, greatest first
//! arc f1 00 00 0.5             # flaw, from, to, probability
//! arc f1 00 10 0.5
//! ```
//!
//! `states` must precede every line that names a state and `flaw` lines must
//! precede the arcs and order that name them. Numbers are written in the
//! shortest form that parses back to the same `f64`, so serialization is
//! lossless.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{ExplicitBuilder, ExplicitInstance};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_prob(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("not a number: {tok}")))
}

pub fn parse_instance(text: &str) -> Result<ExplicitInstance> {
    let mut name = String::from("unnamed");
    let mut builder: Option<ExplicitBuilder> = None;
    let mut state_ix: HashMap<String, usize> = HashMap::new();
    let mut flaw_ix: HashMap<String, usize> = HashMap::new();
    let mut mu = None;
    let mut theta = None;
    let mut order = None;
    let mut arcs = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        let key = toks.next().unwrap_or_default();
        let rest: Vec<&str> = toks.collect();
        let lookup_state = |tok: &str| {
            state_ix
                .get(tok)
                .copied()
                .ok_or_else(|| parse_err(line, format!("unknown state {tok}")))
        };
        match key {
            "instance" => {
                if builder.is_some() {
                    return Err(parse_err(line, "instance name must precede states"));
                }
                name = rest.join(" ");
            }
            "states" => {
                if builder.is_some() {
                    return Err(parse_err(line, "duplicate states line"));
                }
                if rest.is_empty() {
                    return Err(parse_err(line, "states line lists no states"));
                }
                for (i, l) in rest.iter().enumerate() {
                    if state_ix.insert((*l).to_string(), i).is_some() {
                        return Err(parse_err(line, format!("duplicate state {l}")));
                    }
                }
                let mut b = ExplicitBuilder::new(name.clone(), rest.len());
                b.labels(rest.iter().map(|s| s.to_string()).collect());
                builder = Some(b);
            }
            "mu" | "theta" => {
                if builder.is_none() {
                    return Err(parse_err(line, "states must come first"));
                }
                let vals = rest
                    .iter()
                    .map(|t| parse_prob(line, t))
                    .collect::<Result<Vec<_>>>()?;
                if vals.len() != state_ix.len() {
                    return Err(parse_err(
                        line,
                        format!("{key} lists {} values for {} states", vals.len(), state_ix.len()),
                    ));
                }
                if key == "mu" {
                    mu = Some(vals);
                } else {
                    theta = Some(vals);
                }
            }
            "flaw" => {
                let b = builder
                    .as_mut()
                    .ok_or_else(|| parse_err(line, "states must come first"))?;
                let (fname, ms) = rest
                    .split_first()
                    .ok_or_else(|| parse_err(line, "flaw needs a name"))?;
                let members = ms
                    .iter()
                    .map(|t| lookup_state(t))
                    .collect::<Result<Vec<_>>>()?;
                if flaw_ix.contains_key(*fname) {
                    return Err(parse_err(line, format!("duplicate flaw {fname}")));
                }
                let f = b.flaw(*fname, &members);
                flaw_ix.insert((*fname).to_string(), f);
            }
            "order" => {
                let seq = rest
                    .iter()
                    .map(|t| {
                        flaw_ix
                            .get(*t)
                            .copied()
                            .ok_or_else(|| parse_err(line, format!("unknown flaw {t}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                order = Some((line, seq));
            }
            "arc" => {
                if rest.len() != 4 {
                    return Err(parse_err(line, "arc needs: flaw from to probability"));
                }
                let f = flaw_ix
                    .get(rest[0])
                    .copied()
                    .ok_or_else(|| parse_err(line, format!("unknown flaw {}", rest[0])))?;
                let from = lookup_state(rest[1])?;
                let to = lookup_state(rest[2])?;
                let p = parse_prob(line, rest[3])?;
                arcs.push((f, from, to, p));
            }
            other => return Err(parse_err(line, format!("unknown directive {other}"))),
        }
    }

    let mut b = builder.ok_or_else(|| parse_err(0, "missing states line"))?;
    if let Some(mu) = mu {
        b.mu(mu);
    }
    if let Some(theta) = theta {
        b.theta(theta);
    }
    if let Some((line, seq)) = order {
        if seq.len() != flaw_ix.len() {
            return Err(parse_err(line, "order must list every flaw exactly once"));
        }
        b.order(seq);
    }
    for (f, s, t, p) in arcs {
        b.arc(f, s, t, p);
    }
    b.build()
}

pub fn write_instance(inst: &ExplicitInstance) -> String {
    let mut out = String::new();
    let join_f = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let _ = writeln!(out, "instance {}", inst.name());
    let _ = writeln!(out, "states {}", inst.labels().join(" "));
    let _ = writeln!(out, "mu {}", join_f(inst.mu_vec()));
    let _ = writeln!(out, "theta {}", join_f(inst.theta_vec()));
    for f in 0..inst.num_flaws() {
        let ms: Vec<&str> = inst.members(f).iter().map(|&s| inst.state_label(s)).collect();
        let _ = writeln!(out, "flaw {} {}", inst.flaw_name(f), ms.join(" "));
    }
    let seq: Vec<&str> = inst
        .order()
        .sequence()
        .into_iter()
        .map(|f| inst.flaw_name(f))
        .collect();
    let _ = writeln!(out, "order {}", seq.join(" "));
    for (f, s, t, p) in inst.arcs() {
        let _ = writeln!(
            out,
            "arc {} {} {} {p:?}",
            inst.flaw_name(f),
            inst.state_label(s),
            inst.state_label(t)
        );
    }
    out
}
