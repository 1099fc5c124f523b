use rand::Rng;

use super::Sign;
use crate::error::{invalid, Result};
use crate::trees::DecisionTree;

/// Random decision tree on `n` variables with exactly `s` leaves.
///
/// Each internal node queries a variable drawn uniformly from those not yet
/// used on its path; its leaf budget is split uniformly among the splits
/// both subtrees can still realize with the remaining variables. Leaf
/// labels are uniform.
pub fn random_tree_instance<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<DecisionTree> {
    if s < 2 {
        return Err(invalid(format!("tree size {s} must be at least 2")));
    }
    if n == 0 || (n < 64 && s as u64 > 1u64 << n) {
        return Err(invalid(format!("size {s} exceeds 2^{n}")));
    }
    let mut path = Vec::new();
    Ok(build(n, s, &mut path, rng))
}

fn capacity(free_vars: usize) -> usize {
    if free_vars >= usize::BITS as usize - 1 {
        usize::MAX
    } else {
        1usize << free_vars
    }
}

fn build<R: Rng + ?Sized>(n: usize, budget: usize, path: &mut Vec<usize>, rng: &mut R) -> DecisionTree {
    if budget == 1 {
        return DecisionTree::leaf(n, Sign::from_bit(rng.random()));
    }
    let var = loop {
        let v = rng.random_range(0..n);
        if !path.contains(&v) {
            break v;
        }
    };
    let cap = capacity(n - path.len() - 1);
    let lo = 1.max(budget.saturating_sub(cap));
    let hi = (budget - 1).min(cap);
    let left_budget = rng.random_range(lo..=hi);
    path.push(var);
    let left = build(n, left_budget, path, rng);
    let right = build(n, budget - left_budget, path, rng);
    path.pop();
    DecisionTree::split(var, left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{BooleanFunction, Point};
    use crate::trees::Node;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn paths_repeat(t: &DecisionTree) -> bool {
        let mut stack = vec![(t.root(), Vec::<usize>::new())];
        while let Some((id, path)) = stack.pop() {
            if let Node::Internal { var, left, right } = t.node(id) {
                if path.contains(&var) {
                    return true;
                }
                let mut p = path.clone();
                p.push(var);
                stack.push((left, p.clone()));
                stack.push((right, p));
            }
        }
        false
    }

    #[test]
    fn boundaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_tree_instance(4, 1, &mut rng).is_err());
        assert!(random_tree_instance(3, 9, &mut rng).is_err());
        let t = random_tree_instance(4, 2, &mut rng).unwrap();
        assert_eq!(t.size(), 2);
        assert_eq!(t.depth(), 1);
    }

    #[test]
    fn seeded_determinism() {
        let a = random_tree_instance(10, 8, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = random_tree_instance(10, 8, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a.serialize(), b.serialize());
    }

    #[test]
    fn full_budget_gives_complete_tree() {
        let t = random_tree_instance(3, 8, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(t.size(), 8);
        assert_eq!(t.depth(), 3);
        assert!(!paths_repeat(&t));
    }

    proptest! {
        #[test]
        fn generated_trees_have_exact_size(n in 1usize..14, s in 2usize..40, seed: u64) {
            prop_assume!(n >= 63 || s <= 1 << n);
            let t = random_tree_instance(n, s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            prop_assert_eq!(t.size(), s);
            prop_assert_eq!(t.dimension(), n);
            prop_assert!(!paths_repeat(&t));
            let weight: f64 = t.leaves().map(|(d, _)| 0.5f64.powi(d as i32)).sum();
            prop_assert!((weight - 1.0).abs() < 1e-12);
        }

        #[test]
        fn serialize_parse_round_trip(n in 1usize..12, s in 2usize..30, seed: u64) {
            prop_assume!(s <= 1 << n);
            let t = random_tree_instance(n, s, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let parsed = DecisionTree::parse(&t.serialize()).unwrap().with_dimension(n).unwrap();
            prop_assert!(parsed.structurally_eq(&t));
            prop_assert_eq!(parsed.serialize(), t.serialize());
        }
    }

    #[test]
    fn evaluation_matches_tabulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = random_tree_instance(10, 8, &mut rng).unwrap();
        // Tabulate by following paths symbolically: every leaf's subcube gets its label.
        let mut table = vec![None; 1 << 10];
        let mut stack = vec![(t.root(), 0u64, 0u64)];
        while let Some((id, fixed_mask, fixed_vals)) = stack.pop() {
            match t.node(id) {
                Node::Leaf(s) => {
                    for idx in 0..1u64 << 10 {
                        if idx & fixed_mask == fixed_vals {
                            assert!(table[idx as usize].is_none());
                            table[idx as usize] = Some(s);
                        }
                    }
                }
                Node::Internal { var, left, right } => {
                    let b = 1u64 << var;
                    stack.push((left, fixed_mask | b, fixed_vals));
                    stack.push((right, fixed_mask | b, fixed_vals | b));
                }
            }
        }
        for idx in 0..1u64 << 10 {
            assert_eq!(Some(t.eval(&Point::from_index(10, idx))), table[idx as usize]);
        }
    }
}
