//! Reward totals for a derivation chain, computed link by link.
//!
//! Module 0 is an original by `authors[0]`; module j derives from module
//! j - 1 and is published as a remix when `modified[j]`, as a reuse
//! otherwise.

use std::collections::BTreeMap;

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Expected {
    pub points: BTreeMap<usize, u64>,
    pub remix_count: Vec<u32>,
    pub reuse_count: Vec<u32>,
}

pub fn chain(authors: &[usize], modified: &[bool]) -> Expected {
    let n = authors.len();
    let mut out = Expected {
        points: authors.iter().map(|a| (*a, 0)).collect(),
        remix_count: vec![0; n],
        reuse_count: vec![0; n],
    };
    for j in 1..n {
        let actor = authors[j];
        if authors[j - 1] == actor {
            continue;
        }
        let (active, passive) = if modified[j] { (3, 1) } else { (2, 1) };
        *out.points.get_mut(&actor).unwrap() += active;
        for k in 0..j {
            if authors[k] != actor {
                *out.points.get_mut(&authors[k]).unwrap() += passive;
            }
        }
        if modified[j] {
            out.remix_count[j - 1] += 1;
        } else {
            out.reuse_count[j - 1] += 1;
        }
    }
    out
}
