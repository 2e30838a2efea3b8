use super::{bootstrap_estimate, bootstrap_stats, subsampling_estimate, CiMethod, CiOptions, Estimate, Method};
use crate::design::{evaluate_rows, iid_sample, Model};
use crate::distributions::{Distribution, InputModel};
use crate::error::{Error, Result};
use crate::orthant::DominanceCounter;

/// Bin of each draw among `partitions` equal-probability bins of `dist`.
pub fn equal_probability_bins(dist: &Distribution, xs: &[f64], partitions: usize) -> Vec<usize> {
    xs.iter()
        .map(|&x| ((dist.cdf(x) * partitions as f64) as usize).min(partitions - 1))
        .collect()
}

/// `sum_b P(bin b) sup_y |F(y) - F_b(y)|` from binned draws, with the sup
/// taken over the pooled sample points and `<=` componentwise for `k > 1`.
pub fn beta_index_from_sample(bins: &[usize], partitions: usize, y: &[f64], k: usize) -> Result<f64> {
    beta_with_counts(bins, partitions, y, k, None)
}

/// `all`, when given, holds the dominance counts of `y` within itself.
fn beta_with_counts(bins: &[usize], partitions: usize, y: &[f64], k: usize, all: Option<&[usize]>) -> Result<f64> {
    let n = bins.len();
    if partitions < 2 {
        return Err(Error::Partition(format!("need at least 2 partitions, got {partitions}")));
    }
    if n < 20 * partitions {
        return Err(Error::Partition(format!(
            "{n} draws over {partitions} partitions leaves fewer than 20 per partition"
        )));
    }
    if y.len() != n * k {
        return Err(Error::domain("outputs do not match the binned draws"));
    }
    let mut sizes = vec![0usize; partitions];
    for &b in bins {
        sizes[b] += 1;
    }
    if let Some(empty) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Partition(format!("partition {empty} received no draws")));
    }
    let nf = n as f64;
    let mut sup = vec![0.0f64; partitions];
    if k == 1 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
        let mut seen = vec![0usize; partitions];
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j < n && y[order[j]] == y[order[i]] {
                seen[bins[order[j]]] += 1;
                j += 1;
            }
            let f = j as f64 / nf;
            for b in 0..partitions {
                sup[b] = sup[b].max((f - seen[b] as f64 / sizes[b] as f64).abs());
            }
            i = j;
        }
    } else {
        let owned;
        let all = match all {
            Some(a) => a,
            None => {
                owned = dominance_counts(y, k);
                &owned
            }
        };
        for (b, s) in sup.iter_mut().enumerate() {
            let rows: Vec<f64> = (0..n)
                .filter(|&j| bins[j] == b)
                .flat_map(|j| y[j * k..(j + 1) * k].iter().copied())
                .collect();
            let within = DominanceCounter::new(&rows, k).count_many(y);
            *s = all
                .iter()
                .zip(&within)
                .map(|(&a, &w)| (a as f64 / nf - w as f64 / sizes[b] as f64).abs())
                .fold(0.0, f64::max);
        }
    }
    Ok(sup.iter().zip(&sizes).map(|(s, &m)| s * m as f64 / nf).sum())
}

/// Kolmogorov-distance importance of input `v` (0-based) from `n` i.i.d.
/// model runs split into equal-probability bins of `X_v`.
pub fn beta_index<M: Model + ?Sized>(
    inputs: &InputModel,
    model: &M,
    v: usize,
    n: usize,
    partitions: usize,
    seed: u64,
    opts: &CiOptions,
) -> Result<Estimate> {
    if v >= inputs.dim() {
        return Err(Error::domain(format!("input index {v} out of range for {} inputs", inputs.dim())));
    }
    let d = inputs.dim();
    let x = iid_sample(inputs, n, seed)?;
    let y = evaluate_rows(model, &x, d)?;
    let xv: Vec<f64> = x.iter().skip(v).step_by(d).copied().collect();
    let bins = equal_probability_bins(inputs.distribution(v), &xv, partitions);
    beta_estimate(&bins, partitions, &y, model.output_dim(), None, opts)
}

/// Number of rows of `y` below each row, componentwise.
pub(crate) fn dominance_counts(y: &[f64], k: usize) -> Vec<usize> {
    DominanceCounter::new(y, k).count_many(y)
}

pub(crate) fn beta_estimate(
    bins: &[usize],
    partitions: usize,
    y: &[f64],
    k: usize,
    all: Option<&[usize]>,
    opts: &CiOptions,
) -> Result<Estimate> {
    let n = bins.len();
    let value = beta_with_counts(bins, partitions, y, k, all)?;
    let stat = |idx: &[usize]| -> f64 {
        let b: Vec<usize> = idx.iter().map(|&j| bins[j]).collect();
        let ys: Vec<f64> = idx.iter().flat_map(|&j| y[j * k..(j + 1) * k].iter().copied()).collect();
        beta_index_from_sample(&b, partitions, &ys, k).unwrap_or(f64::NAN)
    };
    let method = Method::BetaIndex;
    Ok(match opts.method {
        CiMethod::None => Estimate::point(method, value, n),
        CiMethod::Bootstrap => {
            let stats = bootstrap_stats(n, opts, 5, |idx, _| stat(idx));
            bootstrap_estimate(method, value, n, &stats, opts.level)
        }
        CiMethod::Subsampling => {
            let groups = opts.subsamples.clamp(2, (n / (20 * partitions)).max(2));
            let opts = CiOptions {
                subsamples: groups,
                ..*opts
            };
            subsampling_estimate(method, value, n, &opts, |r| stat(&r.collect::<Vec<_>>()))
        }
        CiMethod::Asymptotic => {
            return Err(Error::domain(
                "the beta index has no asymptotic variance; use bootstrap or subsampling",
            ))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{FnModel, VecFnModel};
    use crate::rng::{Purpose, Stream};
    use rand::seq::SliceRandom;

    fn uniforms(d: usize) -> InputModel {
        InputModel::from_pairs((0..d).map(|i| (format!("x{i}"), Distribution::Uniform { a: 0.0, b: 1.0 }))).unwrap()
    }

    #[test]
    fn identity_model_approaches_three_quarters() {
        let e = beta_index(&uniforms(2), &FnModel(|x: &[f64]| x[0]), 0, 100_000, 50, 1, &CiOptions::none()).unwrap();
        assert!((e.value - 0.75).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn uninfluential_input_matches_permutation_null() {
        let inputs = uniforms(3);
        let m = FnModel(|x: &[f64]| x[0] + x[1] * x[1]);
        let n = 4000;
        let opts = CiOptions {
            resamples: 200,
            ..Default::default()
        };
        let e = beta_index(&inputs, &m, 2, n, 20, 5, &opts).unwrap();
        let x = iid_sample(&inputs, n, 5).unwrap();
        let y = evaluate_rows(&m, &x, 3).unwrap();
        let xv: Vec<f64> = x.iter().skip(2).step_by(3).copied().collect();
        let mut bins = equal_probability_bins(inputs.distribution(2), &xv, 20);
        bins.shuffle(&mut Stream::new(5, Purpose::Custom(1)).rng());
        let null = beta_index_from_sample(&bins, 20, &y, 1).unwrap();
        assert!((e.value - null).abs() <= 3.0 * e.std_error, "{e:?} null {null}");
    }

    #[test]
    fn partition_errors() {
        let y = vec![0.0; 100];
        let bins = vec![0usize; 100];
        assert!(matches!(beta_index_from_sample(&bins, 2, &y, 1), Err(Error::Partition(_))));
        assert!(matches!(beta_index_from_sample(&bins, 10, &y, 1), Err(Error::Partition(_))));
        assert!(matches!(beta_index_from_sample(&bins, 1, &y, 1), Err(Error::Partition(_))));
    }

    #[test]
    fn vector_path_matches_scalar_on_duplicated_output() {
        let inputs = uniforms(2);
        let scalar = beta_index(&inputs, &FnModel(|x: &[f64]| x[0] * x[1]), 0, 3000, 10, 2, &CiOptions::none()).unwrap();
        let twice = VecFnModel {
            k: 2,
            f: |x: &[f64], out: &mut [f64]| {
                out[0] = x[0] * x[1];
                out[1] = x[0] * x[1];
            },
        };
        let vector = beta_index(&inputs, &twice, 0, 3000, 10, 2, &CiOptions::none()).unwrap();
        assert!((scalar.value - vector.value).abs() < 1e-12);
    }
}
