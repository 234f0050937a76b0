//! Holdout model selection mechanics: grid expansion, the seeded
//! development split, and parallel evaluation of grid points.
//!
//! A grid is the cross product of the config's `grid.<key>` axes, in file
//! order with the last axis varying fastest. Every point is evaluated on
//! the same deterministic dev split; the winner is the point with the
//! smallest dev error, ties going to the earlier point in grid order.
//! Evaluation may run concurrently, but results are reduced in grid
//! order, so the outcome never depends on scheduling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};

/// The cross product of the axes, each point a list of (key, value)
/// overrides in axis order. No axes yield one empty point.
pub fn expand_grid(axes: &[(String, Vec<String>)]) -> Vec<Vec<(String, String)>> {
    let mut points: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, candidates) in axes {
        let mut next = Vec::with_capacity(points.len() * candidates.len());
        for point in &points {
            for value in candidates {
                let mut extended = point.clone();
                extended.push((key.clone(), value.clone()));
                next.push(extended);
            }
        }
        points = next;
    }
    points
}

/// Splits `0..n` into (train, dev) index lists, both ascending. The dev
/// side gets `floor(fraction * n)` documents, at least 1 and at most
/// `n - 1` when the fraction is positive and `n >= 2`; a zero fraction
/// yields an empty dev side. The same `(n, fraction, seed)` always
/// produces the same split.
pub fn dev_split(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    assert!((0.0..1.0).contains(&fraction), "fraction must lie in [0, 1)");
    let mut ixs: Vec<usize> = (0..n).collect();
    if fraction == 0.0 || n < 2 {
        return (ixs, Vec::new());
    }
    let dev_n = ((fraction * n as f64).floor() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ixs.shuffle(&mut rng);
    let mut dev: Vec<usize> = ixs[..dev_n].to_vec();
    let mut train: Vec<usize> = ixs[dev_n..].to_vec();
    dev.sort_unstable();
    train.sort_unstable();
    (train, dev)
}

/// Index of the smallest error, earliest on ties.
pub fn pick_best(errors: &[f64]) -> usize {
    let mut best = 0;
    for (i, &e) in errors.iter().enumerate().skip(1) {
        if e < errors[best] {
            best = i;
        }
    }
    best
}

/// Evaluates every grid point, returning dev errors in grid order. Points
/// run in parallel; each sees the base config with its overrides applied.
/// If any point fails, the error of the earliest failing point is
/// returned.
pub fn evaluate_grid<F>(
    base: &Config,
    points: &[Vec<(String, String)>],
    eval: F,
) -> Result<Vec<f64>>
where
    F: Fn(usize, &Config) -> Result<f64> + Sync,
{
    let outcomes: Vec<Result<f64>> = points
        .par_iter()
        .enumerate()
        .map(|(i, overrides)| {
            let mut cfg = base.clone();
            for (key, value) in overrides {
                cfg.set(key, value);
            }
            eval(i, &cfg)
        })
        .collect();
    outcomes.into_iter().collect()
}

/// Formats one grid point for reports: `key=value` pairs joined by
/// spaces, or `(base config)` for the empty point.
pub fn describe_point(overrides: &[(String, String)]) -> String {
    if overrides.is_empty() {
        return "(base config)".to_string();
    }
    overrides
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// The grid points of a config, which model selection requires to be
/// nonempty.
pub fn selection_points(cfg: &Config) -> Result<Vec<Vec<(String, String)>>> {
    let axes = cfg.grid_axes()?;
    if axes.is_empty() {
        return Err(Error::config(
            "model selection needs at least one grid.<key> entry",
        ));
    }
    Ok(expand_grid(&axes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes(spec: &[(&str, &[&str])]) -> Vec<(String, Vec<String>)> {
        spec.iter()
            .map(|(k, vs)| (k.to_string(), vs.iter().map(|v| v.to_string()).collect()))
            .collect()
    }

    #[test]
    fn grid_expansion_varies_the_last_axis_fastest() {
        let points = expand_grid(&axes(&[("a", &["1", "2"]), ("b", &["x", "y"])]));
        let flat: Vec<String> = points.iter().map(|p| describe_point(p)).collect();
        assert_eq!(flat, vec!["a=1 b=x", "a=1 b=y", "a=2 b=x", "a=2 b=y"]);
    }

    #[test]
    fn empty_axes_give_the_single_base_point() {
        let points = expand_grid(&[]);
        assert_eq!(points, vec![Vec::new()]);
        assert_eq!(describe_point(&points[0]), "(base config)");
    }

    #[test]
    fn dev_split_is_deterministic_and_partitions() {
        let (train_a, dev_a) = dev_split(20, 0.25, 7);
        let (train_b, dev_b) = dev_split(20, 0.25, 7);
        assert_eq!(train_a, train_b);
        assert_eq!(dev_a, dev_b);
        assert_eq!(dev_a.len(), 5);
        let mut all: Vec<usize> = train_a.iter().chain(&dev_a).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
        let (_, dev_c) = dev_split(20, 0.25, 8);
        assert_ne!(dev_a, dev_c, "a different seed should move the split");
    }

    #[test]
    fn dev_split_bounds() {
        // Small fractions still hold out one document.
        let (train, dev) = dev_split(10, 0.01, 1);
        assert_eq!(dev.len(), 1);
        assert_eq!(train.len(), 9);
        // A zero fraction holds out nothing.
        let (train, dev) = dev_split(10, 0.0, 1);
        assert_eq!(train.len(), 10);
        assert!(dev.is_empty());
        // A single document never ends up with an empty training side.
        let (train, dev) = dev_split(1, 0.5, 1);
        assert_eq!(train, vec![0]);
        assert!(dev.is_empty());
    }

    #[test]
    fn best_pick_breaks_ties_toward_the_earlier_point() {
        assert_eq!(pick_best(&[0.5, 0.25, 0.25, 0.75]), 1);
        assert_eq!(pick_best(&[0.1]), 0);
    }

    #[test]
    fn grid_evaluation_preserves_order_and_applies_overrides() {
        let base = Config::parse("x=0\n", ".").unwrap();
        let points = expand_grid(&axes(&[("x", &["3", "1", "2"])]));
        let errors = evaluate_grid(&base, &points, |_, cfg| {
            cfg.require_parse::<f64>("x")
        })
        .unwrap();
        assert_eq!(errors, vec![3.0, 1.0, 2.0]);
        assert_eq!(pick_best(&errors), 1);
    }

    #[test]
    fn the_earliest_failure_wins() {
        let base = Config::parse("", ".").unwrap();
        let points = vec![
            vec![("p".to_string(), "0".to_string())],
            vec![("p".to_string(), "1".to_string())],
            vec![("p".to_string(), "2".to_string())],
        ];
        let err = evaluate_grid(&base, &points, |i, _| {
            if i >= 1 {
                Err(Error::train(format!("point {i} failed")))
            } else {
                Ok(0.5)
            }
        })
        .unwrap_err();
        assert!(err.to_string().contains("point 1"));
    }

    #[test]
    fn selection_requires_a_grid() {
        let cfg = Config::parse("a=1\n", ".").unwrap();
        assert!(selection_points(&cfg).is_err());
        let cfg = Config::parse("grid.a=1\n", ".").unwrap();
        assert_eq!(selection_points(&cfg).unwrap().len(), 1);
    }
}
