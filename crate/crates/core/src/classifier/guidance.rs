//! Edit scripts that turn the test of an old scenario into a test for a new one.

use serde::{Deserialize, Serialize};

use crate::scenario::ScenarioNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Add,
    Remove,
    Reorder,
}

/// One suggestion. Removals and reorders name a position in the old
/// scenario, additions and reorders a position in the new one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub op: EditOp,
    pub step: ScenarioNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub old_position: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_position: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Guidance {
    pub edits: Vec<Edit>,
}

impl Guidance {
    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn removals(&self) -> usize {
        self.edits.iter().filter(|e| e.op == EditOp::Remove).count()
    }

    pub fn additions(&self) -> usize {
        self.edits.iter().filter(|e| e.op == EditOp::Add).count()
    }
}

/// Longest common subsequence alignment on step keys; returns the matched
/// (old, new) index pairs in order.
fn lcs(a: &[&str], b: &[&str]) -> Vec<(usize, usize)> {
    let (n, m) = (a.len(), b.len());
    let mut t = vec![vec![0u32; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            t[i][j] = if a[i] == b[j] {
                t[i + 1][j + 1] + 1
            } else {
                t[i + 1][j].max(t[i][j + 1])
            };
        }
    }
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < n && j < m {
        if a[i] == b[j] {
            out.push((i, j));
            i += 1;
            j += 1;
        } else if t[i + 1][j] >= t[i][j + 1] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Guidance for going from `old` to `new`. A step dropped in one place and
/// added in another becomes a single reorder.
pub fn generate_guidance(old: &[ScenarioNode], new: &[ScenarioNode]) -> Guidance {
    let a: Vec<&str> = old.iter().map(|n| n.key.as_str()).collect();
    let b: Vec<&str> = new.iter().map(|n| n.key.as_str()).collect();
    let pairs = lcs(&a, &b);
    let mut kept_old = vec![false; old.len()];
    let mut kept_new = vec![false; new.len()];
    for &(i, j) in &pairs {
        kept_old[i] = true;
        kept_new[j] = true;
    }
    let mut removed: Vec<usize> = (0..old.len()).filter(|&i| !kept_old[i]).collect();
    let mut edits = Vec::new();
    let mut late = Vec::new();
    for j in (0..new.len()).filter(|&j| !kept_new[j]) {
        match removed.iter().position(|&i| old[i].key == new[j].key) {
            Some(p) => {
                let i = removed.remove(p);
                late.push(Edit {
                    op: EditOp::Reorder,
                    step: old[i].clone(),
                    old_position: Some(i),
                    new_position: Some(j),
                });
            }
            None => late.push(Edit {
                op: EditOp::Add,
                step: new[j].clone(),
                old_position: None,
                new_position: Some(j),
            }),
        }
    }
    for i in removed {
        edits.push(Edit {
            op: EditOp::Remove,
            step: old[i].clone(),
            old_position: Some(i),
            new_position: None,
        });
    }
    edits.extend(late);
    Guidance { edits }
}

/// Applies guidance to an old scenario. `None` when the edits do not fit it.
pub fn apply_guidance(old: &[ScenarioNode], g: &Guidance) -> Option<Vec<ScenarioNode>> {
    let mut dropped = vec![false; old.len()];
    let mut placed: Vec<(usize, ScenarioNode)> = Vec::new();
    for e in &g.edits {
        if let Some(i) = e.old_position {
            let slot = dropped.get_mut(i)?;
            if *slot || (e.op == EditOp::Reorder && old[i].key != e.step.key) {
                return None;
            }
            *slot = true;
        }
        if let Some(j) = e.new_position {
            let step = match e.op {
                EditOp::Reorder => old[e.old_position?].clone(),
                _ => e.step.clone(),
            };
            placed.push((j, step));
        }
    }
    let kept: Vec<&ScenarioNode> = old.iter().zip(&dropped).filter(|(_, d)| !**d).map(|(n, _)| n).collect();
    let total = kept.len() + placed.len();
    let mut out: Vec<Option<ScenarioNode>> = vec![None; total];
    for (j, step) in placed {
        let slot = out.get_mut(j)?;
        if slot.is_some() {
            return None;
        }
        *slot = Some(step);
    }
    let mut rest = kept.into_iter();
    for slot in out.iter_mut().filter(|s| s.is_none()) {
        *slot = Some(rest.next()?.clone());
    }
    out.into_iter().collect()
}
