use serde::{Deserialize, Serialize};

use super::{dist, AnalyticsError};

/// A finite sample of at least two values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector(Vec<f64>);

impl SampleVector {
    pub fn new(values: Vec<f64>) -> Result<Self, AnalyticsError> {
        if values.len() < 2 {
            return Err(AnalyticsError::TooFewValues { needed: 2, got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(AnalyticsError::NonFinite(i));
        }
        Ok(SampleVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        mean(&self.0)
    }

    /// Sample (n − 1) standard deviation.
    pub fn sd(&self) -> f64 {
        let m = self.mean();
        let ss: f64 = self.0.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (self.0.len() - 1) as f64).sqrt()
    }

    pub fn summary(&self) -> GroupSummary {
        GroupSummary { n: self.len() as u32, mean: self.mean(), sd: self.sd() }
    }
}

impl TryFrom<Vec<f64>> for SampleVector {
    type Error = AnalyticsError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        SampleVector::new(v)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_pair(x: &SampleVector, y: &SampleVector) -> Result<(), AnalyticsError> {
    if x.len() != y.len() {
        return Err(AnalyticsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(AnalyticsError::TooFewValues { needed: 3, got: x.len() });
    }
    Ok(())
}

/// Product-moment correlation; two-pass centred sums.
pub fn pearson(x: &SampleVector, y: &SampleVector) -> Result<f64, AnalyticsError> {
    check_pair(x, y)?;
    let (mx, my) = (x.mean(), y.mean());
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.values().iter().zip(y.values()) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(x: &SampleVector, y: &SampleVector) -> Result<f64, AnalyticsError> {
    check_pair(x, y)?;
    let rx = SampleVector(ranks(x.values()));
    let ry = SampleVector(ranks(y.values()));
    pearson(&rx, &ry)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: u32,
    pub mean: f64,
    pub sd: f64,
}

impl GroupSummary {
    pub fn new(n: u32, mean: f64, sd: f64) -> Result<Self, AnalyticsError> {
        let s = GroupSummary { n, mean, sd };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), AnalyticsError> {
        if self.n < 2 {
            return Err(AnalyticsError::InvalidSummary(format!("n = {}", self.n)));
        }
        if !self.mean.is_finite() || !self.sd.is_finite() || self.sd < 0.0 {
            return Err(AnalyticsError::InvalidSummary(format!("mean {} sd {}", self.mean, self.sd)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TVariant {
    Pooled,
    /// Unequal variances with Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
}

impl TTest {
    pub fn p_value(&self) -> f64 {
        dist::two_sided_p_value(self.t, self.df)
    }
}

pub fn t_test_from_summary(a: &GroupSummary, b: &GroupSummary, variant: TVariant) -> Result<TTest, AnalyticsError> {
    a.validate()?;
    b.validate()?;
    if a.sd == 0.0 && b.sd == 0.0 {
        return Err(AnalyticsError::ZeroVariance);
    }
    let (n1, n2) = (f64::from(a.n), f64::from(b.n));
    let (v1, v2) = (a.sd * a.sd, b.sd * b.sd);
    let diff = a.mean - b.mean;
    Ok(match variant {
        TVariant::Pooled => {
            let df = n1 + n2 - 2.0;
            let sp2 = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df;
            TTest { t: diff / (sp2 * (1.0 / n1 + 1.0 / n2)).sqrt(), df }
        }
        TVariant::Welch => {
            let (q1, q2) = (v1 / n1, v2 / n2);
            let df = (q1 + q2).powi(2) / (q1 * q1 / (n1 - 1.0) + q2 * q2 / (n2 - 1.0));
            TTest { t: diff / (q1 + q2).sqrt(), df }
        }
    })
}

pub fn t_test(a: &SampleVector, b: &SampleVector, variant: TVariant) -> Result<TTest, AnalyticsError> {
    t_test_from_summary(&a.summary(), &b.summary(), variant)
}
