#![allow(dead_code)]

use pslab::cultures::gen_ic;
use pslab::{Instance, LinearOrder, Rational};

pub fn lcm(a: u64, b: u64) -> u64 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

/// Eats in fixed steps of `1/L` per agent, with `L = lcm(1..=n)^m`. Every
/// exhaustion time of the eating process is a multiple of that step, so the
/// result is exact. Returns the assignment as integer units out of `L`.
pub fn time_stepping_oracle(profile: &[Vec<usize>], m: usize) -> (Vec<Vec<u64>>, u64) {
    let n = profile.len();
    let base = (1..=n as u64).fold(1, lcm);
    let unit = base.pow(m as u32);
    let mut remaining = vec![unit; m];
    let mut eaten = vec![vec![0u64; m]; n];
    let steps = m as u64 * unit / n as u64;
    for _ in 0..steps {
        let tops: Vec<Option<usize>> = profile
            .iter()
            .map(|order| order.iter().copied().find(|&h| remaining[h] > 0))
            .collect();
        for (i, top) in tops.into_iter().enumerate() {
            let h = top.expect("some house left while time remains");
            remaining[h] -= 1;
            eaten[i][h] += 1;
        }
    }
    (eaten, unit)
}

pub fn oracle_assignment(profile: &[Vec<usize>], m: usize) -> Vec<Vec<Rational>> {
    let (eaten, unit) = time_stepping_oracle(profile, m);
    eaten
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|k| Rational::new(k as i64, unit as i64))
                .collect()
        })
        .collect()
}

pub fn rankings(instance: &Instance) -> Vec<Vec<usize>> {
    instance
        .profile()
        .iter()
        .map(|o| o.ranking().to_vec())
        .collect()
}

pub fn order(s: &str) -> LinearOrder {
    s.parse().expect("valid order")
}

/// The contested instance, a few hand-picked shapes and IC draws for every `n, m <= 4`.
pub fn small_corpus(per_cell: u64) -> Vec<Instance> {
    let mut out = vec![
        pslab::selfcheck::contested_instance(),
        pslab::selfcheck::contested_misreport(),
        Instance::from_rankings(&[&[0, 1, 2, 3], &[0, 1, 2, 3], &[0, 1, 2, 3], &[0, 1, 2, 3]])
            .unwrap(),
        Instance::from_rankings(&[&[0, 1, 2], &[1, 2, 0], &[2, 0, 1]]).unwrap(),
        Instance::from_rankings(&[&[0, 1, 2, 3], &[0, 2, 1, 3], &[3, 2, 1, 0]]).unwrap(),
    ];
    for n in 1..=4 {
        for m in 1..=4 {
            for k in 0..per_cell {
                out.push(gen_ic(n, m, 1_000 * (n * 10 + m) as u64 + k).unwrap());
            }
        }
    }
    out
}
