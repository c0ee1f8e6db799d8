//! Edit-distance based name similarity.

use crate::model::canonical_name_lossy;

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let substitution = prev[j] + usize::from(ca != cb);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Similarity as the exact ratio `(longest - distance, longest)` of the
/// canonical names. Both parts are zero when both names are empty.
pub fn similarity_ratio(a: &str, b: &str) -> (usize, usize) {
    let a = canonical_name_lossy(a);
    let b = canonical_name_lossy(b);
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return (0, 0);
    }
    (longest - levenshtein(&a, &b), longest)
}

/// `1 - levenshtein / max_len` over canonical names, in `[0, 1]`.
pub fn name_similarity(a: &str, b: &str) -> f64 {
    match similarity_ratio(a, b) {
        (_, 0) => 1.0,
        (num, den) => num as f64 / den as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(name_similarity("Student", "student"), 1.0);
        assert_eq!(name_similarity("Costumer", "Customer"), 0.75);
        assert_eq!(similarity_ratio("Person", "Persons"), (6, 7));
        assert!((name_similarity("Person", "Persons") - 6.0 / 7.0).abs() < 1e-12);
        assert_eq!(similarity_ratio("Order", "Orders"), (5, 6));
        assert_eq!(similarity_ratio("Course", "Corse"), (5, 6));
    }

    #[test]
    fn distance_basics() {
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("flaw", "lawn"), 2);
        assert_eq!(levenshtein("äb", "ab"), 1);
    }

    #[test]
    fn similarity_is_one_only_for_equal_canonical_names() {
        assert_eq!(name_similarity("Order_Line", "orderline"), 1.0);
        assert!(name_similarity("Order", "Ordr") < 1.0);
    }
}
