//! Reachability over a dense adjacency matrix, closed with Warshall's
//! algorithm.

use std::collections::BTreeSet;

pub struct Closure {
    pub names: Vec<String>,
    /// `reach[i][j]`: a path of length >= 1 leads from i to j.
    pub reach: Vec<Vec<bool>>,
    pub terminal: Vec<bool>,
}

impl Closure {
    pub fn new(names: &[String], edges: &[(String, String)]) -> Closure {
        let n = names.len();
        let index = |name: &String| names.iter().position(|x| x == name).expect("edge endpoint is a node");
        let mut reach = vec![vec![false; n]; n];
        let mut terminal = vec![true; n];
        for (from, to) in edges {
            reach[index(from)][index(to)] = true;
            terminal[index(from)] = false;
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        Closure {
            names: names.to_vec(),
            reach,
            terminal,
        }
    }

    fn idx(&self, name: &str) -> usize {
        self.names.iter().position(|x| x == name).expect("known node")
    }

    /// Nodes reachable from `start`, itself included.
    pub fn reachable(&self, start: &str) -> BTreeSet<String> {
        let s = self.idx(start);
        (0..self.names.len())
            .filter(|&j| j == s || self.reach[s][j])
            .map(|j| self.names[j].clone())
            .collect()
    }

    /// Reachable nodes from which no terminal node can be reached.
    pub fn never_ends(&self, start: &str) -> BTreeSet<String> {
        self.reachable(start)
            .into_iter()
            .filter(|name| {
                let i = self.idx(name);
                !(self.terminal[i] || (0..self.names.len()).any(|j| self.reach[i][j] && self.terminal[j]))
            })
            .collect()
    }

    pub fn unreachable(&self, start: &str) -> BTreeSet<String> {
        let reachable = self.reachable(start);
        self.names.iter().filter(|n| !reachable.contains(*n)).cloned().collect()
    }
}
