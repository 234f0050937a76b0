//! Dynamic pooling: collapsing a variable number of region responses into
//! a fixed number of pooling units.
//!
//! The `L` rows are split into `k` contiguous segments whose sizes differ
//! by at most one. With `L >= k`, the first `L mod k` segments are one row
//! longer than the rest; with `L < k`, the first `L` segments hold one row
//! each and the remaining segments are empty and pool to zero rows, so the
//! output always has exactly `k` rows.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::mat::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Average,
}

impl PoolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolKind::Max => "max",
            PoolKind::Average => "average",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(PoolKind::Max),
            "average" => Ok(PoolKind::Average),
            other => Err(Error::config(format!(
                "unknown pooling kind {other:?} (expected max or average)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolingSpec {
    pub kind: PoolKind,
    /// Number of pooling units `k`, at least 1.
    pub units: usize,
}

/// The `k` contiguous row ranges pooled into each output row.
pub fn segments(rows: usize, k: usize) -> Vec<Range<usize>> {
    assert!(k >= 1, "pooling needs at least one unit");
    let mut out = Vec::with_capacity(k);
    if rows >= k {
        let base = rows / k;
        let extra = rows % k;
        let mut start = 0;
        for s in 0..k {
            let len = base + usize::from(s < extra);
            out.push(start..start + len);
            start += len;
        }
    } else {
        for s in 0..k {
            if s < rows {
                out.push(s..s + 1);
            } else {
                out.push(rows..rows);
            }
        }
    }
    out
}

/// Pooled rows plus, for max pooling, the source row that attained each
/// maximum (the first one on ties), which is where the gradient flows back.
#[derive(Debug, Clone)]
pub struct PoolOutput {
    pub pooled: Mat,
    pub max_src: Option<Vec<Option<usize>>>,
}

/// Pools `conv` (`L x m`) down to `k x m`.
pub fn pool(conv: &Mat, spec: &PoolingSpec) -> PoolOutput {
    let m = conv.cols();
    let segs = segments(conv.rows(), spec.units);
    let mut pooled = Mat::zeros(spec.units, m);
    let mut max_src = match spec.kind {
        PoolKind::Max => Some(vec![None; spec.units * m]),
        PoolKind::Average => None,
    };
    for (s, seg) in segs.iter().enumerate() {
        if seg.is_empty() {
            continue;
        }
        let out = pooled.row_mut(s);
        match spec.kind {
            PoolKind::Max => {
                let src = max_src.as_mut().unwrap();
                out.copy_from_slice(conv.row(seg.start));
                for j in 0..m {
                    src[s * m + j] = Some(seg.start);
                }
                for r in seg.start + 1..seg.end {
                    let row = conv.row(r);
                    for j in 0..m {
                        if row[j] > out[j] {
                            out[j] = row[j];
                            src[s * m + j] = Some(r);
                        }
                    }
                }
            }
            PoolKind::Average => {
                for r in seg.clone() {
                    let row = conv.row(r);
                    for j in 0..m {
                        out[j] += row[j];
                    }
                }
                let inv = 1.0 / seg.len() as f64;
                for o in out.iter_mut() {
                    *o *= inv;
                }
            }
        }
    }
    PoolOutput { pooled, max_src }
}

/// Distributes the gradient at the pooled rows back onto the `rows`
/// convolution rows.
pub fn pool_backward(
    dpooled: &Mat,
    spec: &PoolingSpec,
    rows: usize,
    max_src: Option<&[Option<usize>]>,
) -> Mat {
    let m = dpooled.cols();
    let segs = segments(rows, spec.units);
    let mut dconv = Mat::zeros(rows, m);
    for (s, seg) in segs.iter().enumerate() {
        if seg.is_empty() {
            continue;
        }
        let drow = dpooled.row(s);
        match spec.kind {
            PoolKind::Max => {
                let src = max_src.expect("max pooling requires recorded sources");
                for j in 0..m {
                    if let Some(r) = src[s * m + j] {
                        dconv.row_mut(r)[j] += drow[j];
                    }
                }
            }
            PoolKind::Average => {
                let inv = 1.0 / seg.len() as f64;
                for r in seg.clone() {
                    let out = dconv.row_mut(r);
                    for j in 0..m {
                        out[j] += drow[j] * inv;
                    }
                }
            }
        }
    }
    dconv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Mat {
        Mat::from_vec(rows, cols, data.to_vec())
    }

    #[test]
    fn max_over_all_rows_with_one_unit() {
        let conv = mat(3, 2, &[1.0, -2.0, 3.0, 0.0, 2.0, 5.0]);
        let out = pool(
            &conv,
            &PoolingSpec {
                kind: PoolKind::Max,
                units: 1,
            },
        );
        assert_eq!(out.pooled.row(0), &[3.0, 5.0]);
        assert_eq!(out.max_src.unwrap(), vec![Some(1), Some(2)]);
    }

    #[test]
    fn k_equal_l_is_identity_for_both_kinds() {
        let conv = mat(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        for kind in [PoolKind::Max, PoolKind::Average] {
            let out = pool(&conv, &PoolingSpec { kind, units: 3 });
            assert_eq!(out.pooled, conv);
        }
    }

    #[test]
    fn average_splits_five_rows_into_three_and_two() {
        let conv = mat(5, 1, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let out = pool(
            &conv,
            &PoolingSpec {
                kind: PoolKind::Average,
                units: 2,
            },
        );
        assert_eq!(out.pooled.row(0), &[2.0]);
        assert_eq!(out.pooled.row(1), &[4.5]);
    }

    #[test]
    fn short_input_pads_with_zero_rows() {
        let conv = mat(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let out = pool(
            &conv,
            &PoolingSpec {
                kind: PoolKind::Max,
                units: 4,
            },
        );
        assert_eq!(out.pooled.rows(), 4);
        assert_eq!(out.pooled.row(0), &[1.0, 2.0]);
        assert_eq!(out.pooled.row(1), &[3.0, 4.0]);
        assert_eq!(out.pooled.row(2), &[0.0, 0.0]);
        assert_eq!(out.pooled.row(3), &[0.0, 0.0]);
    }

    #[test]
    fn max_ties_route_to_the_first_attaining_row() {
        let conv = mat(3, 1, &[2.0, 7.0, 7.0]);
        let out = pool(
            &conv,
            &PoolingSpec {
                kind: PoolKind::Max,
                units: 1,
            },
        );
        assert_eq!(out.max_src.unwrap(), vec![Some(1)]);
    }

    #[test]
    fn segment_sizes_differ_by_at_most_one() {
        for rows in 1..30 {
            for k in 1..8 {
                let segs = segments(rows, k);
                assert_eq!(segs.len(), k);
                assert_eq!(segs.iter().map(|s| s.len()).sum::<usize>(), rows.min(rows));
                if rows >= k {
                    let sizes: Vec<usize> = segs.iter().map(|s| s.len()).collect();
                    let max = *sizes.iter().max().unwrap();
                    let min = *sizes.iter().min().unwrap();
                    assert!(max - min <= 1, "rows={rows} k={k} sizes={sizes:?}");
                }
            }
        }
    }

    #[test]
    fn average_backward_spreads_gradient_uniformly() {
        let spec = PoolingSpec {
            kind: PoolKind::Average,
            units: 2,
        };
        let dpooled = mat(2, 1, &[3.0, 4.0]);
        let dconv = pool_backward(&dpooled, &spec, 5, None);
        assert_eq!(dconv.data(), &[1.0, 1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn max_backward_routes_to_recorded_sources() {
        let spec = PoolingSpec {
            kind: PoolKind::Max,
            units: 1,
        };
        let dpooled = mat(1, 2, &[1.0, 2.0]);
        let src = vec![Some(2), Some(0)];
        let dconv = pool_backward(&dpooled, &spec, 3, Some(&src));
        assert_eq!(dconv.row(0), &[0.0, 2.0]);
        assert_eq!(dconv.row(1), &[0.0, 0.0]);
        assert_eq!(dconv.row(2), &[1.0, 0.0]);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn pooling_commutes_with_column_permutation(
            rows in 1usize..12,
            units in 1usize..6,
            max in proptest::bool::ANY,
            data in proptest::collection::vec(-5.0f64..5.0, 24),
        ) {
            let cols = 2;
            let conv = Mat::from_vec(12, cols, data);
            let view = Mat::from_vec(rows, cols, conv.data()[..rows * cols].to_vec());
            let mut swapped = Mat::zeros(rows, cols);
            for r in 0..rows {
                swapped.set(r, 0, view.get(r, 1));
                swapped.set(r, 1, view.get(r, 0));
            }
            let kind = if max { PoolKind::Max } else { PoolKind::Average };
            let spec = PoolingSpec { kind, units };
            let a = pool(&view, &spec).pooled;
            let b = pool(&swapped, &spec).pooled;
            for s in 0..units {
                prop_assert_eq!(a.get(s, 0), b.get(s, 1));
                prop_assert_eq!(a.get(s, 1), b.get(s, 0));
            }
        }

        #[test]
        fn segments_partition_the_rows(rows in 0usize..50, k in 1usize..12) {
            let segs = segments(rows, k);
            prop_assert_eq!(segs.len(), k);
            let mut covered = 0;
            for s in &segs {
                prop_assert_eq!(s.start, covered.min(s.start));
                prop_assert!(s.start <= s.end);
                covered = covered.max(s.end);
            }
            prop_assert_eq!(segs.iter().map(|s| s.len()).sum::<usize>(), rows);
            // Contiguity: each segment starts where the previous ended.
            let mut expect = 0;
            for s in segs.iter().filter(|s| !s.is_empty()) {
                prop_assert_eq!(s.start, expect);
                expect = s.end;
            }
            prop_assert_eq!(expect, rows);
        }
    }
}
