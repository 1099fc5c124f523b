#![allow(dead_code)]

use std::collections::HashSet;

use dtrecon::{Constants, TruthTable};

/// Constants for `s = 8, eps = 0.1`: depth 9, noise rate 1/2, score
/// accuracy about 0.08.
pub fn desk_closeness() -> Constants {
    Constants {
        c_d: 3e-4,
        c_p: 20.0,
        c_tau: 2160.0,
        c_leaf: 0.25,
        ..Constants::default()
    }
}

/// Constants for `s = 8, eps = 0.05`: depth 9 (below 12), noise rate 1/2,
/// score accuracy about 0.08.
pub fn desk_tester() -> Constants {
    Constants {
        c_d: 4e-5,
        c_p: 40.0,
        c_tau: 17280.0,
        c_leaf: 0.05,
        ..Constants::default()
    }
}

/// Constants for `s = 8, eps = 0.2`: depth 4, noise rate 1/2, score
/// accuracy about 0.1.
pub fn desk_scaling() -> Constants {
    Constants {
        c_d: 1.1e-3,
        c_p: 10.0,
        c_tau: 340.0,
        c_leaf: 0.25,
        ..Constants::default()
    }
}

/// Truth table of a 4-variable function as a 16-bit mask, bit `idx` set
/// iff `f(idx) = +1`.
pub fn mask4(t: &TruthTable) -> u16 {
    assert_eq!(t.n(), 4);
    t.values()
        .iter()
        .enumerate()
        .fold(0u16, |m, (i, &b)| m | (b as u16) << i)
}

/// `sets[k]` holds every 4-variable function computed by some tree with at
/// most `k` leaves, built by closing under `mux(i, left, right)`.
pub fn tree_function_sets(max_k: usize) -> Vec<Vec<u16>> {
    let var_mask: Vec<u16> = (0..4)
        .map(|i| (0..16u16).filter(|idx| idx >> i & 1 == 1).fold(0, |m, idx| m | 1 << idx))
        .collect();
    let mut sets: Vec<Vec<u16>> = vec![Vec::new(), vec![0x0000, 0xffff]];
    for k in 2..=max_k {
        let mut seen: HashSet<u16> = sets[k - 1].iter().copied().collect();
        let mut fresh = Vec::new();
        for k0 in 1..k {
            for &a in &sets[k0] {
                for &b in &sets[k - k0] {
                    for &m in &var_mask {
                        let g = (a & !m) | (b & m);
                        if seen.insert(g) {
                            fresh.push(g);
                        }
                    }
                }
            }
        }
        let mut all = sets[k - 1].clone();
        all.extend(fresh);
        sets.push(all);
    }
    sets
}

pub fn brute_opt_mismatches(sets: &[Vec<u16>], f: u16, k: usize) -> u32 {
    sets[k].iter().map(|&g| (f ^ g).count_ones()).min().unwrap()
}
