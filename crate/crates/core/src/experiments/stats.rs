use serde::Serialize;

/// Sample mean with its standard error (sample standard deviation over
/// `sqrt(n)`; zero for a single sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Stat {
        assert!(!xs.is_empty(), "statistics of an empty sample");
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() == 1 {
            return Stat { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Stat {
            mean,
            stderr: (var / n).sqrt(),
        }
    }

    pub fn of_counts(xs: impl IntoIterator<Item = usize>) -> Stat {
        let v: Vec<f64> = xs.into_iter().map(|x| x as f64).collect();
        Stat::of(&v)
    }
}

/// Ratio of two sample means with a delta-method standard error that
/// accounts for the covariance of paired samples.
pub fn ratio_of_means(xs: &[f64], ys: &[f64]) -> Option<Stat> {
    assert_eq!(xs.len(), ys.len());
    let sx = Stat::of(xs);
    let sy = Stat::of(ys);
    if sy.mean <= 0.0 {
        return None;
    }
    let r = sx.mean / sy.mean;
    let n = xs.len() as f64;
    if xs.len() == 1 {
        return Some(Stat { mean: r, stderr: 0.0 });
    }
    let cov = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - sx.mean) * (y - sy.mean))
        .sum::<f64>()
        / (n - 1.0);
    // Var(X̄ - r Ȳ) / Ȳ², with Var(X̄) = se_x² etc.
    let var = (sx.stderr.powi(2) + r * r * sy.stderr.powi(2) - 2.0 * r * cov / n) / sy.mean.powi(2);
    Some(Stat {
        mean: r,
        stderr: var.max(0.0).sqrt(),
    })
}

/// Mean and standard error of the paired differences `x - y`.
pub fn paired_difference(xs: &[f64], ys: &[f64]) -> Stat {
    assert_eq!(xs.len(), ys.len());
    let d: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    Stat::of(&d)
}
