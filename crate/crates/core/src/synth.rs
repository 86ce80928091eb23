//! Seeded generators with planted causal and triggering structure.

use nalgebra::{DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::TimeSeriesPanel;

/// Name of the target column in generated scenarios.
pub const TARGET: &str = "y";

/// Simulates `x^t = sum_l A_l x^{t-l} + e^t` with `N(0, noise_sigma^2)`
/// innovations. `coefficients[l - 1]` is the `p x p` matrix `A_l` (row = equation).
/// The first `10 * d_true` simulated steps are discarded as burn-in.
pub fn gen_var_panel(
    p: usize,
    t_len: usize,
    d_true: usize,
    coefficients: &[Vec<Vec<f64>>],
    noise_sigma: f64,
    seed: u64,
) -> Result<TimeSeriesPanel> {
    if p == 0 || d_true == 0 || coefficients.len() != d_true {
        return Err(Error::InvalidConfig(format!(
            "expected {d_true} coefficient matrices for {p} variables"
        )));
    }
    for a in coefficients {
        if a.len() != p || a.iter().any(|row| row.len() != p) {
            return Err(Error::InvalidConfig("coefficient matrices must be p x p".into()));
        }
    }
    let radius = spectral_radius(coefficients, p);
    if radius >= 1.0 {
        return Err(Error::UnstableSystem(radius));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let burn = 10 * d_true;
    let total = t_len + burn;
    let mut x = vec![vec![0.0; total]; p];
    for t in 0..total {
        for i in 0..p {
            let mut v = noise_sigma * rng.sample::<f64, _>(StandardNormal);
            for (l, a) in coefficients.iter().enumerate() {
                if t > l {
                    v += (0..p).map(|j| a[i][j] * x[j][t - l - 1]).sum::<f64>();
                }
            }
            x[i][t] = v;
        }
    }
    let columns = x.into_iter().map(|c| c[burn..].to_vec()).collect();
    TimeSeriesPanel::from_columns((1..=p).map(|i| format!("x{i}")), columns)
}

/// Largest eigenvalue modulus of the VAR companion matrix.
pub fn spectral_radius(coefficients: &[Vec<Vec<f64>>], p: usize) -> f64 {
    let d = coefficients.len();
    let n = p * d;
    let companion = DMatrix::from_fn(n, n, |r, c| {
        if r < p {
            coefficients[c / p][r][c % p]
        } else if c == r - p {
            1.0
        } else {
            0.0
        }
    });
    if companion.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    match Schur::try_new(companion.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => gelfand_radius(companion),
    }
}

/// `||A^k||^{1/k}` for `k = 2^40`, by repeated squaring with rescaling.
fn gelfand_radius(mut a: DMatrix<f64>) -> f64 {
    let mut log_scale = 0.0;
    let mut k = 1.0;
    for _ in 0..40 {
        let norm = a.norm();
        if norm == 0.0 {
            return 0.0;
        }
        a /= norm;
        log_scale += norm.ln() / k;
        a = &a * &a;
        k *= 2.0;
    }
    (log_scale + a.norm().ln() / k).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Innovations {
    #[default]
    Gaussian,
    /// Centered, right-skewed gamma noise with shape 2 and the same variance.
    Gamma,
}

/// Planted cause/trigger scenario. Column 0 is the target `y`; the others are
/// `x1 .. x{p-1}` and `cause_index` / `trigger_index` point into those.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    #[serde(rename = "T")]
    pub t_len: usize,
    pub p: usize,
    /// Lag order to analyse the scenario with.
    pub d_true: usize,
    pub cause_index: usize,
    pub trigger_index: usize,
    pub t1_true: usize,
    pub gamma_interaction: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Direct effect `a` of the cause on `y`.
    pub cause_weight: f64,
    pub cause_mean: f64,
    pub cause_ar: f64,
    pub cause_sigma: f64,
    pub trigger_sigma: f64,
    pub trigger_ar: f64,
    pub innovations: Innovations,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            t_len: 300,
            p: 5,
            d_true: 2,
            cause_index: 1,
            trigger_index: 2,
            t1_true: 150,
            gamma_interaction: 0.8,
            noise_sigma: 0.1,
            seed: 0,
            cause_weight: 0.8,
            cause_mean: 1.0,
            cause_ar: 0.1,
            cause_sigma: 1.0,
            trigger_sigma: 0.2,
            trigger_ar: 0.9,
            innovations: Innovations::Gaussian,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.p < 3 {
            return bad(format!("scenario needs at least 3 variables, got {}", self.p));
        }
        for (what, idx) in [("cause_index", self.cause_index), ("trigger_index", self.trigger_index)] {
            if idx == 0 || idx >= self.p {
                return bad(format!("{what} {idx} must lie in 1..{}", self.p));
            }
        }
        if self.cause_index == self.trigger_index {
            return bad("cause and trigger must differ".into());
        }
        if self.d_true == 0 {
            return bad("d_true must be positive".into());
        }
        if self.t1_true <= self.d_true || self.t1_true + 30 >= self.t_len {
            return bad(format!(
                "t1_true {} must lie strictly between d_true {} and T - 30 = {}",
                self.t1_true,
                self.d_true,
                self.t_len.saturating_sub(30)
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.trigger_sigma >= 0.0 && self.cause_sigma >= 0.0) {
            return bad("noise scales must be nonnegative".into());
        }
        if self.cause_ar.abs() >= 1.0 || self.trigger_ar.abs() >= 1.0 {
            return bad("autoregressive coefficients must lie in (-1, 1)".into());
        }
        Ok(())
    }

    pub fn cause_name(&self) -> String {
        format!("x{}", self.cause_index)
    }

    pub fn trigger_name(&self) -> String {
        format!("x{}", self.trigger_index)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub cause: String,
    pub trigger: String,
    pub t1: usize,
}

/// Smoothed unit step centred on `t1`, rising over about three samples.
pub fn trigger_step(t: usize, t1: usize) -> f64 {
    1.0 / (1.0 + (-(t as f64 - t1 as f64 + 0.5) / 0.5).exp())
}

/// Generates `y^t = a c^{t-1} + g s^{t-1} c^{t-1} + e^t` where the cause `c` is
/// a stationary AR(1) around `cause_mean` and the trigger `s` is a smoothed
/// step at `t1_true` plus AR(1) fluctuations. All other variables are white noise.
pub fn gen_trigger_scenario(spec: &ScenarioSpec) -> Result<(TimeSeriesPanel, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let t_len = spec.t_len;
    let shape: f64 = 2.0;
    let gamma = Gamma::new(shape, 1.0).expect("valid gamma");
    let innovation = |rng: &mut ChaCha8Rng| match spec.innovations {
        Innovations::Gaussian => rng.sample::<f64, _>(StandardNormal),
        Innovations::Gamma => (gamma.sample(rng) - shape) / shape.sqrt(),
    };

    let burn = 50;
    let mut cause = vec![0.0; t_len];
    let mut dev = 0.0;
    let mut trig_noise = 0.0;
    let trig_innov = spec.trigger_sigma * (1.0 - spec.trigger_ar.powi(2)).sqrt();
    let cause_innov = spec.cause_sigma * (1.0 - spec.cause_ar.powi(2)).sqrt();
    for _ in 0..burn {
        dev = spec.cause_ar * dev + cause_innov * rng.sample::<f64, _>(StandardNormal);
        trig_noise = spec.trigger_ar * trig_noise + trig_innov * rng.sample::<f64, _>(StandardNormal);
    }
    let mut trigger = vec![0.0; t_len];
    for t in 0..t_len {
        dev = spec.cause_ar * dev + cause_innov * rng.sample::<f64, _>(StandardNormal);
        trig_noise = spec.trigger_ar * trig_noise + trig_innov * rng.sample::<f64, _>(StandardNormal);
        cause[t] = spec.cause_mean + dev;
        trigger[t] = trigger_step(t, spec.t1_true) + trig_noise;
    }

    let mut y = vec![0.0; t_len];
    y[0] = spec.cause_weight * spec.cause_mean + spec.noise_sigma * innovation(&mut rng);
    for t in 1..t_len {
        let c = cause[t - 1];
        y[t] = spec.cause_weight * c
            + spec.gamma_interaction * trigger[t - 1] * c
            + spec.noise_sigma * innovation(&mut rng);
    }

    let mut names = vec![TARGET.to_string()];
    let mut columns = vec![y];
    for i in 1..spec.p {
        names.push(format!("x{i}"));
        columns.push(if i == spec.cause_index {
            cause.clone()
        } else if i == spec.trigger_index {
            trigger.clone()
        } else {
            (0..t_len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
        });
    }
    let panel = TimeSeriesPanel::from_columns(names, columns)?;
    Ok((
        panel,
        GroundTruth {
            cause: spec.cause_name(),
            trigger: spec.trigger_name(),
            t1: spec.t1_true,
        },
    ))
}
