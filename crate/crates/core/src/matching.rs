//! Optimal one-to-one matching of student elements to reference elements.
//!
//! Candidate pairs need a name similarity of at least the threshold. Among
//! them the assignment with the largest total similarity wins; ties go to the
//! assignment whose sorted `(reference, student)` pair list is
//! lexicographically smallest. Similarities are exact ratios, so the solver
//! works on scaled integer weights and ties are detected exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{canonical_name_lossy, Diagram, DiagramKind};
use crate::similarity::similarity_ratio;

pub const DEFAULT_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("cannot match a {reference} against a {student}")]
    KindMismatch { reference: DiagramKind, student: DiagramKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub reference: String,
    pub student: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchPair>,
    pub unmatched_reference: Vec<String>,
    pub unmatched_student: Vec<String>,
}

impl Matching {
    /// Student name paired with the reference node `reference`, if any.
    pub fn student_for(&self, reference: &str) -> Option<&str> {
        let key = canonical_name_lossy(reference);
        self.pairs
            .iter()
            .find(|p| canonical_name_lossy(&p.reference) == key)
            .map(|p| p.student.as_str())
    }

    /// The same matching seen from the other side.
    pub fn transposed(&self) -> Matching {
        Matching {
            pairs: self
                .pairs
                .iter()
                .map(|p| MatchPair { reference: p.student.clone(), student: p.reference.clone(), score: p.score })
                .collect(),
            unmatched_reference: self.unmatched_student.clone(),
            unmatched_student: self.unmatched_reference.clone(),
        }
    }

    /// Reference name paired with the student node `student`, if any.
    pub fn reference_for(&self, student: &str) -> Option<&str> {
        let key = canonical_name_lossy(student);
        self.pairs
            .iter()
            .find(|p| canonical_name_lossy(&p.student) == key)
            .map(|p| p.reference.as_str())
    }
}

/// Matches the nodes of `student` to the nodes of `reference`.
pub fn match_nodes(
    reference: &Diagram,
    student: &Diagram,
    threshold: f64,
) -> Result<Matching, MatchError> {
    if reference.kind != student.kind {
        return Err(MatchError::KindMismatch { reference: reference.kind, student: student.kind });
    }
    let ref_names: Vec<&str> = reference.nodes.iter().map(|n| n.name.as_str()).collect();
    let stu_names: Vec<&str> = student.nodes.iter().map(|n| n.name.as_str()).collect();
    Ok(match_names(&ref_names, &stu_names, threshold))
}

/// Name-level matching used for nodes and for cross-kind comparisons.
pub fn match_names(reference: &[&str], student: &[&str], threshold: f64) -> Matching {
    let pairs = assign(reference, student, threshold, |_, _| true);
    let mut ref_used = vec![false; reference.len()];
    let mut stu_used = vec![false; student.len()];
    let mut matching = Matching::default();
    for (r, s, score) in pairs {
        ref_used[r] = true;
        stu_used[s] = true;
        matching.pairs.push(MatchPair {
            reference: reference[r].to_string(),
            student: student[s].to_string(),
            score,
        });
    }
    let unmatched = |names: &[&str], used: &[bool]| -> Vec<String> {
        let mut v: Vec<String> = names
            .iter()
            .zip(used)
            .filter(|(_, u)| !**u)
            .map(|(n, _)| n.to_string())
            .collect();
        v.sort_by_cached_key(|n| canonical_name_lossy(n));
        v
    };
    matching.unmatched_reference = unmatched(reference, &ref_used);
    matching.unmatched_student = unmatched(student, &stu_used);
    matching
}

/// Optimal assignment of `student` names to `reference` names.
///
/// `compatible(r, s)` can veto pairs (operations need equal arity).
/// Returns `(reference index, student index, score)` sorted by reference
/// canonical name.
pub fn assign(
    reference: &[&str],
    student: &[&str],
    threshold: f64,
    compatible: impl Fn(usize, usize) -> bool,
) -> Vec<(usize, usize, f64)> {
    if reference.is_empty() || student.is_empty() {
        return Vec::new();
    }
    let ratios: Vec<Vec<(usize, usize)>> = reference
        .iter()
        .map(|r| student.iter().map(|s| similarity_ratio(r, s)).collect())
        .collect();
    let scale = common_scale(ratios.iter().flatten().map(|&(_, den)| den));
    let weights: Vec<Vec<i64>> = ratios
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &(num, den))| {
                    let score = if den == 0 { 1.0 } else { num as f64 / den as f64 };
                    if score + 1e-12 < threshold || num == 0 && den != 0 || !compatible(i, j) {
                        0
                    } else if den == 0 {
                        scale
                    } else {
                        scaled(num, den, scale)
                    }
                })
                .collect()
        })
        .collect();

    let ref_order = order_by_canonical(reference);
    let stu_order = order_by_canonical(student);
    let mut rows: Vec<usize> = ref_order.clone();
    let mut cols: Vec<usize> = stu_order.clone();
    let total = best_total(&weights, &rows, &cols);
    let mut acc = 0i64;
    let mut out = Vec::new();
    for &r in &ref_order {
        rows.retain(|&x| x != r);
        let mut chosen = None;
        for &s in &stu_order {
            if !cols.contains(&s) || weights[r][s] == 0 {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&c| c != s).collect();
            if acc + weights[r][s] + best_total(&weights, &rows, &rest) == total {
                chosen = Some(s);
                break;
            }
        }
        if let Some(s) = chosen {
            acc += weights[r][s];
            cols.retain(|&c| c != s);
            let (num, den) = ratios[r][s];
            let score = if den == 0 { 1.0 } else { num as f64 / den as f64 };
            out.push((r, s, score));
        }
    }
    out
}

fn order_by_canonical(names: &[&str]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..names.len()).collect();
    idx.sort_by_cached_key(|&i| (canonical_name_lossy(names[i]), names[i].to_string()));
    idx
}

/// Common denominator for the similarity ratios, capped to keep sums in range.
fn common_scale(dens: impl Iterator<Item = usize>) -> i64 {
    const CAP: u128 = 1 << 40;
    let mut lcm: u128 = 1;
    for d in dens.filter(|&d| d > 0) {
        let d = d as u128;
        lcm = lcm / gcd(lcm, d) * d;
        if lcm > CAP {
            return CAP as i64;
        }
    }
    lcm as i64
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn scaled(num: usize, den: usize, scale: i64) -> i64 {
    let exact = num as i128 * scale as i128;
    if exact % den as i128 == 0 {
        (exact / den as i128) as i64
    } else {
        (exact as f64 / den as f64).round() as i64
    }
}

/// Maximum total weight of a matching between `rows` and `cols`.
fn best_total(weights: &[Vec<i64>], rows: &[usize], cols: &[usize]) -> i64 {
    if rows.is_empty() || cols.is_empty() {
        return 0;
    }
    let n = rows.len().max(cols.len());
    let mut cost = vec![vec![0i64; n]; n];
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            cost[i][j] = -weights[r][c];
        }
    }
    let assignment = hungarian(&cost);
    assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| -cost[i][j])
        .sum()
}

/// Minimum-cost perfect assignment on a square matrix (potentials method).
/// Returns, for each row, its assigned column.
pub(crate) fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
