//! Text format for instances.
//!
//! ```text
//! # comment
//! theta 1 0.5 0
//! noise_sd 1
//! arms canonical        # or `arms` followed by one row of reals per arm
//! items                 # one row per item (0/1 rows give binary items)
//! 1 0 0
//! 0 1 0
//! ```
//!
//! Instead of `items`, an oracle descriptor: `oracle top_k K`,
//! `oracle matching SIDE`, or `oracle dag NODES SOURCE SINK` followed by one
//! `u v` edge per row. Arms default to the canonical basis.

use crate::env::Instance;
use crate::error::{Error, Result};
use crate::item::Item;
use crate::linalg::ArmSet;
use crate::oracles::{Dag, ItemOracle};

enum Block {
    None,
    Arms,
    Items,
    Edges,
}

enum OracleSpec {
    TopK(usize),
    Matching(usize),
    Dag { nodes: usize, source: usize, sink: usize },
}

fn cfg_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("instance line {line}: {msg}"))
}

fn numbers<T: std::str::FromStr>(line: usize, fields: &[&str]) -> Result<Vec<T>> {
    fields
        .iter()
        .map(|f| f.parse().map_err(|_| cfg_err(line, format!("bad number '{f}'"))))
        .collect()
}

fn one<T: std::str::FromStr>(line: usize, fields: &[&str]) -> Result<T> {
    match fields {
        [f] => f.parse().map_err(|_| cfg_err(line, format!("bad number '{f}'"))),
        _ => Err(cfg_err(line, "expected one value")),
    }
}

/// Parses an instance description.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut theta: Option<Vec<f64>> = None;
    let mut noise_sd = 1.0;
    let mut canonical = true;
    let mut arms: Vec<Vec<f64>> = Vec::new();
    let mut items: Vec<Vec<f64>> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut oracle: Option<OracleSpec> = None;
    let mut block = Block::None;
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some(&head) = fields.first() else {
            continue;
        };
        let rest = &fields[1..];
        if head.starts_with(|c: char| c.is_ascii_alphabetic()) {
            block = Block::None;
            match head {
                "theta" => theta = Some(numbers(n, rest)?),
                "noise_sd" => noise_sd = one(n, rest)?,
                "arms" => match rest {
                    ["canonical"] => canonical = true,
                    [] => {
                        canonical = false;
                        block = Block::Arms;
                    }
                    _ => return Err(cfg_err(n, "expected 'arms' or 'arms canonical'")),
                },
                "items" => block = Block::Items,
                "oracle" => {
                    let spec = match rest {
                        ["top_k", k] => OracleSpec::TopK(one(n, &[k])?),
                        ["matching", s] => OracleSpec::Matching(one(n, &[s])?),
                        ["dag", a, b, c] => {
                            let v: Vec<usize> = numbers(n, &[a, b, c])?;
                            block = Block::Edges;
                            OracleSpec::Dag {
                                nodes: v[0],
                                source: v[1],
                                sink: v[2],
                            }
                        }
                        _ => return Err(cfg_err(n, "unknown oracle descriptor")),
                    };
                    oracle = Some(spec);
                }
                other => return Err(cfg_err(n, format!("unknown keyword '{other}'"))),
            }
            continue;
        }
        match block {
            Block::Arms => arms.push(numbers(n, &fields)?),
            Block::Items => items.push(numbers(n, &fields)?),
            Block::Edges => match numbers::<usize>(n, &fields)?.as_slice() {
                [u, v] => edges.push((*u, *v)),
                _ => return Err(cfg_err(n, "an edge is two node ids")),
            },
            Block::None => return Err(cfg_err(n, "data row outside a block")),
        }
    }
    let theta = theta.ok_or_else(|| Error::Config("instance has no theta".into()))?;
    let d = theta.len();
    let arm_set = if canonical { ArmSet::canonical(d) } else { ArmSet::new(arms)? };
    let inst = match (oracle, items.is_empty()) {
        (Some(_), false) => return Err(Error::Config("give either items or an oracle".into())),
        (None, true) => return Err(Error::Config("instance has neither items nor an oracle".into())),
        (None, false) => Instance::explicit(arm_set, items.into_iter().map(Item::dense).collect(), theta)?,
        (Some(spec), true) => {
            let o = match spec {
                OracleSpec::TopK(k) => ItemOracle::top_k(d, k)?,
                OracleSpec::Matching(side) => ItemOracle::matching(side)?,
                OracleSpec::Dag { nodes, source, sink } => ItemOracle::dag_path(Dag::new(nodes, edges, source, sink)?),
            };
            Instance::with_oracle(arm_set, o, theta)?
        }
    };
    inst.with_noise_sd(noise_sd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_items_with_general_arms() {
        let inst = parse_instance(
            "# two arms\ntheta 1 0\nnoise_sd 0.5\narms\n1 0\n-0.7071 0.7071\nitems\n0.7 0.7\n0.6 0.8\n",
        )
        .unwrap();
        assert_eq!(inst.arms().len(), 2);
        assert!(!inst.arms().is_canonical_basis());
        assert_eq!(inst.z_star().values(), &[0.7, 0.7]);
        assert_eq!(inst.noise_sd(), 0.5);
    }

    #[test]
    fn oracles() {
        let top = parse_instance("theta 1 0.5 0\noracle top_k 1\n").unwrap();
        assert_eq!(top.z_star(), &Item::from_support(3, [0]));
        let m = parse_instance("theta 1 0 0 1\noracle matching 2\n").unwrap();
        assert_eq!(m.z_star(), &Item::from_support(4, [0, 3]));
        let g = parse_instance("theta 1 -1 1 -1\noracle dag 4 0 3\n0 1\n0 2\n1 3\n2 3\n").unwrap();
        assert_eq!(g.z_star(), &Item::from_support(4, [0, 2]));
    }

    #[test]
    fn malformed() {
        for bad in [
            "items\n1 0\n",
            "theta 1 0\n",
            "theta 1 0\nitems\n1 x\n",
            "theta 1 0\n1 0\n",
            "theta 1 0\noracle ring 3\n",
            "theta 1 0\noracle top_k 1\nitems\n1 0\n",
            "theta 1 1\nitems\n1 0\n0 1\n",
        ] {
            assert!(parse_instance(bad).is_err(), "{bad}");
        }
    }
}
