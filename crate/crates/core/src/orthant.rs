//! Orthant dominance counting: how many of `n` points in `R^k` satisfy
//! `x <= q` componentwise, for many queries `q`.
//!
//! Each coordinate is sorted once, so the points below `q_c` on axis `c`
//! form a prefix of that axis order. Prefixes are stored as bitsets at
//! every `stride`-th length; a query ANDs one stored prefix per axis and
//! then checks the few points between the stored and the true prefix
//! length directly.

use rayon::prelude::*;

pub struct DominanceCounter {
    k: usize,
    n: usize,
    words: usize,
    stride: usize,
    /// Per axis: sorted values.
    sorted: Vec<Vec<f64>>,
    /// Per axis: point ids in sorted order.
    order: Vec<Vec<u32>>,
    /// Per axis: position of each point in `order`.
    rank: Vec<Vec<u32>>,
    /// Per axis: `n / stride + 1` bitsets, the `t`-th holding the first
    /// `t * stride` points of the axis order.
    prefixes: Vec<Vec<u64>>,
}

impl DominanceCounter {
    /// `points` holds `n` rows of `k` coordinates.
    pub fn new(points: &[f64], k: usize) -> Self {
        assert!(k > 0 && points.len().is_multiple_of(k), "points must be rows of k values");
        let n = points.len() / k;
        assert!(n <= u32::MAX as usize);
        let mut by_first: Vec<usize> = (0..n).collect();
        by_first.sort_by(|&a, &b| points[a * k].total_cmp(&points[b * k]));
        let points: Vec<f64> = by_first.iter().flat_map(|&i| points[i * k..(i + 1) * k].iter().copied()).collect();
        let words = n.div_ceil(64);
        let stride = 64usize.max((n / 2048).next_multiple_of(64));
        let mut sorted = Vec::with_capacity(k);
        let mut order = Vec::with_capacity(k);
        let mut rank = Vec::with_capacity(k);
        let mut prefixes = Vec::with_capacity(k);
        for c in 0..k {
            let mut ids: Vec<u32> = (0..n as u32).collect();
            if c > 0 {
                ids.sort_by(|&a, &b| points[a as usize * k + c].total_cmp(&points[b as usize * k + c]));
            }
            let mut r = vec![0u32; n];
            for (pos, &id) in ids.iter().enumerate() {
                r[id as usize] = pos as u32;
            }
            let mut bits = Vec::new();
            if c > 0 {
                let checkpoints = n / stride + 1;
                bits = vec![0u64; checkpoints * words];
                let mut current = vec![0u64; words];
                for t in 1..checkpoints {
                    for &id in &ids[(t - 1) * stride..t * stride] {
                        current[id as usize / 64] |= 1 << (id % 64);
                    }
                    bits[t * words..(t + 1) * words].copy_from_slice(&current);
                }
            }
            sorted.push(ids.iter().map(|&id| points[id as usize * k + c]).collect());
            order.push(ids);
            rank.push(r);
            prefixes.push(bits);
        }
        DominanceCounter {
            k,
            n,
            words,
            stride,
            sorted,
            order,
            rank,
            prefixes,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Number of points `x` with `x_c <= q_c` for every `c`.
    pub fn count(&self, q: &[f64]) -> usize {
        let mut scratch = vec![0u64; self.words];
        self.count_with(q, &mut scratch)
    }

    fn count_with(&self, q: &[f64], scratch: &mut [u64]) -> usize {
        let k = self.k;
        let mut len = [0usize; 8];
        let mut len_vec;
        let len: &mut [usize] = if k <= 8 {
            &mut len[..k]
        } else {
            len_vec = vec![0usize; k];
            &mut len_vec
        };
        for c in 0..k {
            len[c] = self.sorted[c].partition_point(|&v| v <= q[c]);
            if len[c] == 0 {
                return 0;
            }
        }
        if k == 1 {
            return len[0];
        }
        // point ids follow axis 0, so its prefix is the id range [0, len[0])
        let head = len[0];
        let full = head / 64;
        let words = head.div_ceil(64);
        let cp = |c: usize| (len[c] / self.stride) * self.stride;
        let w = self.words;
        let rows: Vec<&[u64]> = (1..k)
            .map(|c| {
                let t = len[c] / self.stride;
                &self.prefixes[c][t * w..t * w + words]
            })
            .collect();
        let mut total = and_count(&rows, scratch, full, head % 64);
        for c in 1..k {
            for &id in &self.order[c][cp(c)..len[c]] {
                let id = id as usize;
                let dominated = id < head && (1..k).all(|a| (self.rank[a][id] as usize) < len[a]);
                let earlier = (1..c).any(|a| {
                    let r = self.rank[a][id] as usize;
                    r >= cp(a) && r < len[a]
                });
                if dominated && !earlier {
                    total += 1;
                }
            }
        }
        total
    }

    /// Counts for `m` query rows, in query order.
    pub fn count_many(&self, queries: &[f64]) -> Vec<usize> {
        queries
            .par_chunks(self.k)
            .map_init(|| vec![0u64; self.words], |scratch, q| self.count_with(q, scratch))
            .collect()
    }
}

/// Population count of the intersection of equally long bitsets, keeping
/// the first `full` words and the low `tail` bits of the next one.
fn and_count(rows: &[&[u64]], scratch: &mut [u64], full: usize, tail: usize) -> usize {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("popcnt") {
            // SAFETY: the required features were detected at runtime.
            return unsafe { and_count_avx2(rows, scratch, full, tail) };
        }
        if std::arch::is_x86_feature_detected!("popcnt") {
            // SAFETY: as above.
            return unsafe { and_count_popcnt(rows, scratch, full, tail) };
        }
    }
    and_count_portable(rows, scratch, full, tail)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,popcnt")]
unsafe fn and_count_avx2(rows: &[&[u64]], scratch: &mut [u64], full: usize, tail: usize) -> usize {
    and_count_portable(rows, scratch, full, tail)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
unsafe fn and_count_popcnt(rows: &[&[u64]], scratch: &mut [u64], full: usize, tail: usize) -> usize {
    and_count_portable(rows, scratch, full, tail)
}

#[inline(always)]
fn and_count_portable(rows: &[&[u64]], scratch: &mut [u64], full: usize, tail: usize) -> usize {
    let ones = |x: u64| x.count_ones() as usize;
    let last = |i: usize| rows.iter().fold(u64::MAX, |acc, r| acc & r[i]);
    let mut total = if tail > 0 { ones(last(full) & ((1u64 << tail) - 1)) } else { 0 };
    total += match *rows {
        [a] => a[..full].iter().map(|&a| ones(a)).sum::<usize>(),
        [a, b] => a[..full].iter().zip(&b[..full]).map(|(a, b)| ones(a & b)).sum(),
        [a, b, c] => a[..full]
            .iter()
            .zip(&b[..full])
            .zip(&c[..full])
            .map(|((a, b), c)| ones(a & b & c))
            .sum(),
        _ => {
            let scratch = &mut scratch[..full];
            scratch.copy_from_slice(&rows[0][..full]);
            for r in &rows[1..] {
                for (s, b) in scratch.iter_mut().zip(&r[..full]) {
                    *s &= b;
                }
            }
            scratch.iter().map(|&x| ones(x)).sum()
        }
    };
    total
}

/// Brute-force dominance count, for small inputs and cross-checks.
pub fn count_dominated(points: &[f64], k: usize, q: &[f64]) -> usize {
    points
        .chunks(k)
        .filter(|x| x.iter().zip(q).all(|(a, b)| a <= b))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_brute_force_with_ties() {
        let k = 3;
        let n = 700;
        let pts: Vec<f64> = (0..n * k).map(|i| ((i * 7919 + 13) % 11) as f64).collect();
        let counter = DominanceCounter::new(&pts, k);
        let queries: Vec<f64> = (0..200 * k).map(|i| ((i * 31 + 5) % 12) as f64 - 0.5).collect();
        let fast = counter.count_many(&queries);
        for (q, got) in queries.chunks(k).zip(fast) {
            assert_eq!(got, count_dominated(&pts, k, q));
        }
    }

    #[test]
    fn scalar_is_a_rank() {
        let counter = DominanceCounter::new(&[3.0, 1.0, 2.0, 2.0], 1);
        assert_eq!(counter.count(&[2.0]), 3);
        assert_eq!(counter.count(&[0.0]), 0);
        assert_eq!(counter.count(&[9.0]), 4);
    }

    proptest! {
        #[test]
        fn random_points(
            k in 1usize..5,
            seed_pts in proptest::collection::vec(-5i32..5, 4..2000),
            qs in proptest::collection::vec(-6i32..6, 4..40),
        ) {
            let n = seed_pts.len() / k;
            let pts: Vec<f64> = seed_pts[..n * k].iter().map(|&v| v as f64 * 0.5).collect();
            let m = qs.len() / k;
            let queries: Vec<f64> = qs[..m * k].iter().map(|&v| v as f64 * 0.5).collect();
            let counter = DominanceCounter::new(&pts, k);
            for q in queries.chunks(k) {
                prop_assert_eq!(counter.count(q), count_dominated(&pts, k, q));
            }
        }
    }
}
