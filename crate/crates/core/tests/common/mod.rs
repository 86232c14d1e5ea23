#![allow(dead_code)]

use octsca_core::HeightMap;
use proptest::prelude::*;

/// Valid surface grown from flat by random single-site events applied
/// directly to heights: a local minimum rises by 2, a local maximum drops by 2.
pub fn random_heights(x: usize, y: usize, events: &[(usize, usize, bool)]) -> HeightMap {
    let mut h: Vec<i64> = (0..x * y).map(|i| ((i % x + i / x) % 2) as i64).collect();
    let at = |xx: i64, yy: i64| (yy.rem_euclid(y as i64) as usize) * x + xx.rem_euclid(x as i64) as usize;
    for &(ex, ey, deposit) in events {
        let (ex, ey) = ((ex % x) as i64, (ey % y) as i64);
        let c = h[at(ex, ey)];
        let nbs = [at(ex - 1, ey), at(ex + 1, ey), at(ex, ey - 1), at(ex, ey + 1)];
        let d = if deposit { 1 } else { -1 };
        if nbs.iter().all(|&n| h[n] == c + d) {
            h[at(ex, ey)] += 2 * d;
        }
    }
    HeightMap::new(x, y, h).unwrap()
}

pub fn events() -> impl Strategy<Value = Vec<(usize, usize, bool)>> {
    prop::collection::vec((0usize..1024, 0usize..1024, prop::bool::weighted(0.7)), 0..4000)
}
