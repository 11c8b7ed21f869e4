//! Per-pixel lifting inputs: depth binning, depth distributions and
//! Gaussian depth primitives.

use crate::error::{Error, Result};
use crate::geometry::Vec3;

const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// `B` uniform depth bins over `[d_min, d_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthBinning {
    d_min: f64,
    d_max: f64,
    bins: usize,
}

impl DepthBinning {
    pub fn new(d_min: f64, d_max: f64, bins: usize) -> Result<Self> {
        if !(d_min.is_finite() && d_max.is_finite() && d_min < d_max) {
            return Err(Error::config(format!("depth range [{d_min}, {d_max}) is empty")));
        }
        if bins == 0 {
            return Err(Error::config("depth binning needs at least one bin"));
        }
        Ok(Self { d_min, d_max, bins })
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn width(&self) -> f64 {
        (self.d_max - self.d_min) / self.bins as f64
    }

    /// `d_i = d_min + i (d_max - d_min) / B`, the lower edge of bin `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.d_min + i as f64 * (self.d_max - self.d_min) / self.bins as f64
    }

    /// Bin containing depth `d`, if any.
    pub fn bin_of(&self, d: f64) -> Option<usize> {
        if !(d >= self.d_min && d < self.d_max) {
            return None;
        }
        let i = ((d - self.d_min) / self.width()).floor() as usize;
        Some(i.min(self.bins - 1))
    }

    /// Probability mass of a normal depth density `N(mean, sigma^2)` in each
    /// bin `[d_i, d_i + width)`, renormalized over the covered range.
    ///
    /// `sigma == 0` is the delta limit: one-hot at the bin containing `mean`.
    /// Returns `None` when the density puts no representable mass inside the
    /// binned range.
    pub fn discretize_normal(&self, mean: f64, sigma: f64) -> Option<Vec<f64>> {
        if sigma <= 0.0 {
            let hot = self.bin_of(mean)?;
            let mut probs = vec![0.0; self.bins];
            probs[hot] = 1.0;
            return Some(probs);
        }
        let cdf = |d: f64| 0.5 * libm::erfc(-(d - mean) / (sigma * std::f64::consts::SQRT_2));
        let edges: Vec<f64> = (0..=self.bins)
            .map(|i| if i == self.bins { self.d_max } else { self.value(i) })
            .map(cdf)
            .collect();
        let mut probs: Vec<f64> = edges.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return None;
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Some(probs)
    }
}

/// One pixel's context feature and depth distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelLift {
    pub feature: Vec<f64>,
    depth_probs: Vec<f64>,
    pub pixel: (f64, f64),
    pub camera_index: usize,
}

impl PixelLift {
    /// `depth_probs` must already lie on the probability simplex.
    pub fn new(
        feature: Vec<f64>,
        depth_probs: Vec<f64>,
        pixel: (f64, f64),
        camera_index: usize,
    ) -> Result<Self> {
        check_simplex(&depth_probs)?;
        Ok(Self {
            feature,
            depth_probs,
            pixel,
            camera_index,
        })
    }

    /// Like [`PixelLift::new`] but rescales non-negative weights onto the simplex.
    pub fn normalized(
        feature: Vec<f64>,
        mut weights: Vec<f64>,
        pixel: (f64, f64),
        camera_index: usize,
    ) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::argument("depth weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::argument("depth weights sum to zero"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(feature, weights, pixel, camera_index)
    }

    pub fn depth_probs(&self) -> &[f64] {
        &self.depth_probs
    }
}

fn check_simplex(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::argument("depth distribution is empty"));
    }
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::argument("depth probabilities must be finite and non-negative"));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::argument(format!("depth probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// Anisotropic Gaussian with diagonal covariance `diag(sigma^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrimitive {
    mean: Vec3,
    sigma: Vec3,
    opacity: f64,
    weight: Vec<f64>,
}

impl GaussianPrimitive {
    pub fn new(mean: Vec3, sigma: Vec3, opacity: f64, weight: Vec<f64>) -> Result<Self> {
        if mean.iter().chain(weight.iter()).any(|v| !v.is_finite()) {
            return Err(Error::argument("Gaussian mean and weight must be finite"));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::argument(format!("Gaussian sigma must be positive, got {sigma:?}")));
        }
        if !(0.0..=1.0).contains(&opacity) {
            return Err(Error::argument(format!("opacity {opacity} outside [0, 1]")));
        }
        Ok(Self {
            mean,
            sigma,
            opacity,
            weight,
        })
    }

    pub fn mean(&self) -> Vec3 {
        self.mean
    }

    pub fn sigma(&self) -> Vec3 {
        self.sigma
    }

    pub fn opacity(&self) -> f64 {
        self.opacity
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// `opacity * exp(-0.5 (x - mean)^T diag(sigma^2)^-1 (x - mean))`.
    pub fn eval(&self, x: Vec3) -> f64 {
        let m: f64 = (0..3)
            .map(|k| {
                let t = (x[k] - self.mean[k]) / self.sigma[k];
                t * t
            })
            .sum();
        self.opacity * (-0.5 * m).exp()
    }

    /// The kernel with z marginalized out, evaluated at horizontal position
    /// `(x, y)`; the z normalization is folded into the opacity.
    pub fn eval_bev(&self, x: f64, y: f64) -> f64 {
        let tx = (x - self.mean[0]) / self.sigma[0];
        let ty = (y - self.mean[1]) / self.sigma[1];
        self.opacity * (-0.5 * (tx * tx + ty * ty)).exp()
    }
}
