//! Degree and win-adjacency summaries of the outcome graph.
//!
//! Every `+1` entry `u[i][j]` is a directed edge from `i` (tail, the winner)
//! to `j` (head). An edge is a treatment win when it runs from a treatment
//! patient to a control patient, and a control win in the opposite case.
//! Both moment algorithms only need the per-vertex tallies collected here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outcome::OutcomeMatrix;
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Treatment,
    Control,
}

impl Arm {
    /// 1 for treatment, 0 for control.
    pub fn indicator(self) -> u8 {
        match self {
            Arm::Treatment => 1,
            Arm::Control => 0,
        }
    }

    pub fn other(self) -> Arm {
        match self {
            Arm::Treatment => Arm::Control,
            Arm::Control => Arm::Treatment,
        }
    }
}

/// Arm labels for all N patients, with at least one patient in each arm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmAssignment {
    arms: Vec<Arm>,
    m: usize,
    n: usize,
}

impl ArmAssignment {
    pub fn new(arms: Vec<Arm>) -> Result<Self> {
        let m = arms.iter().filter(|&&a| a == Arm::Treatment).count();
        let n = arms.len() - m;
        if m == 0 || n == 0 {
            return Err(Error::DegenerateDesign { m, n });
        }
        Ok(ArmAssignment { arms, m, n })
    }

    /// From 0/1 indicators (1 = treatment).
    pub fn from_indicators(ind: &[u8]) -> Result<Self> {
        let arms = ind
            .iter()
            .enumerate()
            .map(|(i, &d)| match d {
                1 => Ok(Arm::Treatment),
                0 => Ok(Arm::Control),
                other => Err(Error::Input(format!(
                    "arm indicator {other} at position {i}; expected 0 or 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms)
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn arm(&self, i: usize) -> Arm {
        self.arms[i]
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }

    /// Treatment count.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Control count.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn indicators(&self) -> Vec<u8> {
        self.arms.iter().map(|a| a.indicator()).collect()
    }

    /// Same patients with the arm labels exchanged.
    pub fn swapped(&self) -> ArmAssignment {
        ArmAssignment {
            arms: self.arms.iter().map(|a| a.other()).collect(),
            m: self.n,
            n: self.m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSummary {
    /// Edges whose head is this vertex (losses).
    pub indegree: u64,
    /// Edges whose tail is this vertex (wins).
    pub outdegree: u64,
    /// Adjacent treatment-win edges.
    pub t_adj: u64,
    /// Adjacent control-win edges.
    pub c_adj: u64,
    pub arm: Arm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub vertices: Vec<VertexSummary>,
    pub total_edges: u64,
    pub observed_t_wins: u64,
    pub observed_c_wins: u64,
}

impl GraphSummary {
    pub fn n_patients(&self) -> usize {
        self.vertices.len()
    }

    pub fn m(&self) -> usize {
        self.vertices.iter().filter(|v| v.arm == Arm::Treatment).count()
    }

    pub fn n(&self) -> usize {
        self.n_patients() - self.m()
    }

    /// Checks the conservation identities. Used by tests and as a cheap sanity
    /// pass on summaries that did not come from [`summarize`].
    pub fn check_conservation(&self) -> Result<()> {
        let sum = |f: fn(&VertexSummary) -> u64| self.vertices.iter().map(f).sum::<u64>();
        let (ind, outd) = (sum(|v| v.indegree), sum(|v| v.outdegree));
        let (t, c) = (sum(|v| v.t_adj), sum(|v| v.c_adj));
        let fail = |msg: String| Err(Error::Input(format!("graph summary inconsistent: {msg}")));
        if ind != self.total_edges || outd != self.total_edges {
            return fail(format!(
                "sum indegree {ind}, sum outdegree {outd}, E {}",
                self.total_edges
            ));
        }
        if t != 2 * self.observed_t_wins || c != 2 * self.observed_c_wins {
            return fail(format!(
                "adjacent win tallies ({t}, {c}) vs wins ({}, {})",
                self.observed_t_wins, self.observed_c_wins
            ));
        }
        if self.observed_t_wins + self.observed_c_wins > self.total_edges {
            return fail("more wins than edges".into());
        }
        if let Some(v) = self
            .vertices
            .iter()
            .find(|v| v.t_adj + v.c_adj > v.indegree + v.outdegree)
        {
            return fail(format!("vertex with more adjacent wins than edges: {v:?}"));
        }
        Ok(())
    }
}

/// One pass over the matrix rows. Skewness lets the indegree of `v` be read
/// from row `v` as its count of `-1` entries, so each row is independent.
pub fn summarize(u: &OutcomeMatrix, arms: &ArmAssignment) -> Result<GraphSummary> {
    summarize_with(u, arms, Exec::default())
}

pub fn summarize_with(u: &OutcomeMatrix, arms: &ArmAssignment, exec: Exec) -> Result<GraphSummary> {
    let n = u.n_patients();
    if arms.len() != n {
        return Err(Error::Shape(format!(
            "arm vector has {} entries but the matrix is {n} x {n}",
            arms.len()
        )));
    }
    let labels = arms.arms();
    // 1 for treatment; `cross[j] ^ cross[v]` flags a cross-arm pair.
    let cross: Vec<u8> = labels.iter().map(|&a| u8::from(a == Arm::Treatment)).collect();
    let vertices = par::map_indexed(exec, n, |v| {
        let arm = labels[v];
        let own = cross[v];
        // Branch-free counts so the scan vectorises; a row has fewer than
        // 2^32 entries.
        let (mut indegree, mut outdegree, mut win_out, mut win_in) = (0u32, 0u32, 0u32, 0u32);
        for (&s, &c) in u.row(v).iter().zip(&cross) {
            let (win, loss) = (u8::from(s == 1), u8::from(s == -1));
            let x = c ^ own;
            outdegree += u32::from(win);
            indegree += u32::from(loss);
            win_out += u32::from(win & x);
            win_in += u32::from(loss & x);
        }
        let (indegree, outdegree) = (u64::from(indegree), u64::from(outdegree));
        let (win_out, win_in) = (u64::from(win_out), u64::from(win_in));
        // A cross-arm win by a treatment vertex is a treatment edge; a
        // cross-arm loss of a treatment vertex is a control edge.
        let (t_adj, c_adj) = match arm {
            Arm::Treatment => (win_out, win_in),
            Arm::Control => (win_in, win_out),
        };
        VertexSummary {
            indegree,
            outdegree,
            t_adj,
            c_adj,
            arm,
        }
    });
    let total_edges = vertices.iter().map(|v| v.outdegree).sum();
    let observed_t_wins = vertices
        .iter()
        .filter(|v| v.arm == Arm::Treatment)
        .map(|v| v.t_adj)
        .sum();
    let observed_c_wins = vertices.iter().filter(|v| v.arm == Arm::Control).map(|v| v.c_adj).sum();
    Ok(GraphSummary {
        vertices,
        total_edges,
        observed_t_wins,
        observed_c_wins,
    })
}
