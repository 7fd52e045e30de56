//! Brownian-bridge measures ν_β in log-derivative coordinates, Radon–Nikodym
//! densities, Gaussian shift bounds, and the Monte Carlo experiments built on
//! the weighted measures ν_{β,c,h}.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::gamma;

use crate::circle_maps::{diffeo_from_log_derivative, CircleDiffeo, CircleMap, LogDerivativeJet};
use crate::error::{domain, Result};
use crate::operators::{self, EnergyTable, Spin, VirasoroWeight};
use crate::quad;
use crate::stats::{self, MCEstimate};
use crate::welding;
use crate::C64;

/// β at which E b(s)b(t) = s(2π−t), s ≤ t. In general E b(s)b(t) = s(2π−t)/(8β).
pub const REFERENCE_BETA: f64 = 0.125;

pub const DEFAULT_MODES: usize = 512;
pub const DEFAULT_GRID: usize = 4096;

/// β_H with exp(−(β/2)Σn²b_n²) = exp(−(β_H/2)⟨b,b⟩_H), ⟨b,b⟩_H = ∫b′².
pub fn cameron_martin_beta(beta: f64) -> f64 {
    4.0 * beta / PI
}

/// b(t) = Σ_{n=1}^{N} b_n sin(nt/2) with its samples at t_j = 2πj/M, j = 0..=M.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgePath {
    beta: f64,
    coeffs: Vec<f64>,
    values: Vec<f64>,
}

impl BridgePath {
    pub fn from_coeffs(coeffs: Vec<f64>, beta: f64, grid: usize) -> Result<Self> {
        if coeffs.len() >= grid {
            return domain("grid must be finer than the mode count");
        }
        let values = quad::sine_synthesis(&coeffs, grid);
        Ok(BridgePath { beta, coeffs, values })
    }

    /// Path from grid samples; coefficients are recomputed up to `n_modes`.
    pub fn from_values(values: Vec<f64>, beta: f64, n_modes: usize) -> Self {
        let coeffs = quad::sine_analysis(&values, n_modes);
        BridgePath { beta, coeffs, values }
    }

    pub fn zero(beta: f64, n_modes: usize, grid: usize) -> Self {
        BridgePath { beta, coeffs: vec![0.0; n_modes], values: vec![0.0; grid + 1] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// M, the number of grid intervals.
    pub fn grid_size(&self) -> usize {
        self.values.len() - 1
    }

    /// Cubic interpolation of the periodic extension.
    pub fn eval(&self, t: f64) -> f64 {
        let m = self.grid_size();
        let x = t.rem_euclid(TAU) / TAU * m as f64;
        let i = x.floor() as isize;
        let f = x - i as f64;
        let at = |k: isize| self.values[k.rem_euclid(m as isize) as usize];
        let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        p1 + 0.5
            * f
            * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)))
    }

    /// ⟨b, b⟩_H = ∫b′² = (π/4)Σ n² b_n².
    pub fn h_norm_sq(&self) -> f64 {
        h_inner(&self.coeffs, &self.coeffs)
    }
}

/// ⟨x, y⟩_H in sine coordinates.
pub fn h_inner(x: &[f64], y: &[f64]) -> f64 {
    0.25 * PI * x.iter().zip(y).enumerate().map(|(i, (a, b))| ((i + 1) * (i + 1)) as f64 * a * b).sum::<f64>()
}

/// Independent b_n ~ N(0, 1/(βn²)) synthesized on M points.
pub fn sample_bridge<R: Rng + ?Sized>(beta: f64, n_modes: usize, grid: usize, rng: &mut R) -> Result<BridgePath> {
    if !(beta > 0.0) {
        return domain("β must be positive");
    }
    let s = 1.0 / beta.sqrt();
    let coeffs = (1..=n_modes)
        .map(|n| {
            let z: f64 = StandardNormal.sample(rng);
            z * s / n as f64
        })
        .collect();
    BridgePath::from_coeffs(coeffs, beta, grid)
}

/// A draw from ν_β: based part from the bridge composed with a uniform rotation.
#[derive(Debug, Clone)]
pub struct NuBetaSample {
    pub path: BridgePath,
    pub rotation: f64,
    pub diffeo: CircleDiffeo,
}

pub fn sample_nu_beta<R: Rng + ?Sized>(beta: f64, n_modes: usize, grid: usize, rng: &mut R) -> Result<NuBetaSample> {
    let path = sample_bridge(beta, n_modes, grid, rng)?;
    let rotation = rng.gen::<f64>() * TAU;
    let diffeo = diffeo_from_log_derivative(&path, rotation)?;
    Ok(NuBetaSample { path, rotation, diffeo })
}

/// exp(−(β_H/2)∫(b_φ′(Ψ₁)² − 2b_φ″(Ψ₁))(αe^b)² dτ) with b_φ = ln Φ′ − ln Φ′(0).
pub fn rn_derivative_printed<P: CircleMap + LogDerivativeJet>(phi: &P, b: &BridgePath) -> Result<f64> {
    let v = b.values();
    let m = b.grid_size();
    let e: Vec<f64> = v[..m].iter().map(|x| x.exp()).collect();
    let cum = quad::cumulative_periodic(&e);
    let alpha = TAU / cum[m];
    let mut acc = 0.0;
    for j in 0..m {
        let [_, d1, d2] = phi.log_jet(alpha * cum[j]);
        let w = alpha * e[j];
        acc += (d1 * d1 - 2.0 * d2) * w * w;
    }
    let integral = acc * TAU / m as f64;
    let out = (-0.5 * cameron_martin_beta(b.beta()) * integral).exp();
    if !out.is_finite() || !integral.is_finite() {
        return domain("log-derivative jets of φ are not finite on the grid");
    }
    Ok(out)
}

/// (1/2π)∫ e^{b_φ} on a 1024-point grid; equals 1/Φ′(0) up to quadrature.
pub fn mean_exp_log_derivative<P: LogDerivativeJet>(phi: &P) -> f64 {
    let m = 1024;
    quad::grid(m).iter().map(|&t| phi.log_jet(t)[0].exp()).sum::<f64>() / m as f64
}

/// dν_β(L_φ ·)/dν_β at b: the printed expression times det(1 + DK) for the
/// shift K(b) = b_φ∘Ψ₁, which is (1/2π)∫e^{b_φ}.
pub fn rn_derivative<P: CircleMap + LogDerivativeJet>(phi: &P, b: &BridgePath) -> Result<f64> {
    Ok(rn_derivative_printed(phi, b)? * mean_exp_log_derivative(phi))
}

/// Cameron–Martin direction h = Σ h_n sin(nt/2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameronMartinShift {
    pub coeffs: Vec<f64>,
}

impl CameronMartinShift {
    /// h = c·sin(kt/2) scaled to the requested ∫h′².
    pub fn single_mode(k: usize, norm: f64) -> Result<Self> {
        if k == 0 {
            return domain("mode index starts at 1");
        }
        let mut coeffs = vec![0.0; k];
        coeffs[k - 1] = norm / (0.5 * k as f64 * PI.sqrt());
        Ok(CameronMartinShift { coeffs })
    }

    pub fn norm_sq(&self) -> f64 {
        h_inner(&self.coeffs, &self.coeffs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftBoundReport {
    pub beta: f64,
    pub h_norm: f64,
    pub p: u32,
    /// MC estimate of ∫|dτ_hν/dν − 1|^p dν.
    pub lhs: MCEstimate,
    /// Closed form of the same integral.
    pub exact: f64,
    /// 2Γ((p+1)/2)(β_H|h|²_H)^{p/2}.
    pub bound: f64,
    pub holds: bool,
}

/// Closed-form ∫|e^{aZ − a²/2} − 1|^p for p ∈ {1, 2}.
pub fn shift_lhs_exact(a_sq: f64, p: u32) -> Option<f64> {
    let a = a_sq.sqrt();
    match p {
        1 => {
            let n = Normal::new(0.0, 1.0).ok()?;
            Some(4.0 * n.cdf(0.5 * a) - 2.0)
        }
        2 => Some(a_sq.exp_m1()),
        _ => None,
    }
}

pub fn shift_bound_value(a_sq: f64, p: u32) -> f64 {
    2.0 * gamma((p as f64 + 1.0) / 2.0) * a_sq.powf(p as f64 / 2.0)
}

/// Monte Carlo of the shift integral for b ↦ b + h under the sampled product
/// measure; the density is exp(β_H⟨h,b⟩_H − β_H|h|²_H/2).
pub fn shift_bound_check(
    h: &CameronMartinShift,
    beta: f64,
    p: u32,
    n_samples: usize,
    seed: u64,
    workers: usize,
) -> Result<ShiftBoundReport> {
    if !(beta > 0.0) || p == 0 {
        return domain("β must be positive and p ≥ 1");
    }
    let bh = cameron_martin_beta(beta);
    let hn = h.norm_sq();
    let k = h.coeffs.len();
    let s = 1.0 / beta.sqrt();
    let samples = stats::par_map(n_samples, seed, workers, |_, rng| {
        let b: Vec<f64> = (1..=k)
            .map(|n| {
                let z: f64 = StandardNormal.sample(rng);
                z * s / n as f64
            })
            .collect();
        let x = bh * h_inner(&h.coeffs, &b) - 0.5 * bh * hn;
        x.exp_m1().abs().powi(p as i32)
    });
    let lhs = MCEstimate::from_samples(&samples, seed);
    let a_sq = bh * hn;
    let bound = shift_bound_value(a_sq, p);
    let exact = shift_lhs_exact(a_sq, p).unwrap_or(f64::NAN);
    let holds = lhs.mean - 3.0 * lhs.stderr <= bound;
    Ok(ShiftBoundReport { beta, h_norm: hn.sqrt(), p, lhs, exact, bound, holds })
}

/// ln of the Question statistic: S = nβ²∫e^{2b/β}/(∫e^{b/β})², computed with
/// the maximum subtracted. The sample value is e^S > 1.
pub fn question_3220_log_statistic(b: &BridgePath, beta: f64, n: u32) -> f64 {
    let v = &b.values()[..b.grid_size()];
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let one: Vec<f64> = v.iter().map(|x| ((x - top) / beta).exp()).collect();
    let two: Vec<f64> = one.iter().map(|x| x * x).collect();
    let i1 = quad::periodic_trapezoid(&one);
    let i2 = quad::periodic_trapezoid(&two);
    n as f64 * beta * beta * i2 / (i1 * i1)
}

/// Overflow threshold for e^S.
pub const Q3220_CENSOR: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Q3220Report {
    pub beta: f64,
    pub n: u32,
    /// Raw mean of e^S over uncensored samples.
    pub estimate: MCEstimate,
    /// Quantiles of S itself.
    pub log_quantiles: Vec<(f64, f64)>,
    pub censored_fraction: f64,
    /// Mean of e^S after dropping the top 1%.
    pub trimmed_mean: f64,
    pub min_value: f64,
}

/// Samples the bridge at temperature β (the ν_β path) and reports e^S.
pub fn question_3220_estimator(
    beta: f64,
    n: u32,
    n_samples: usize,
    n_modes: usize,
    grid: usize,
    seed: u64,
    workers: usize,
) -> Result<Q3220Report> {
    if !(beta > 0.0) || n == 0 {
        return domain("β > 0 and n ≥ 1 required");
    }
    let logs: Vec<Result<f64>> = stats::par_map(n_samples, seed, workers, |_, rng| {
        let b = sample_bridge(beta, n_modes, grid, rng)?;
        Ok(question_3220_log_statistic(&b, beta, n))
    });
    let logs: Vec<f64> = logs.into_iter().collect::<Result<_>>()?;
    let kept: Vec<f64> = logs.iter().filter(|&&s| s <= Q3220_CENSOR).map(|s| s.exp()).collect();
    let censored = n_samples - kept.len();
    let estimate = MCEstimate::from_samples(&kept, seed);
    let mut sorted_logs = logs.clone();
    sorted_logs.sort_by(f64::total_cmp);
    let log_quantiles = stats::QUANTILE_LEVELS
        .iter()
        .map(|&p| (p, stats::quantile_sorted(&sorted_logs, p)))
        .collect();
    let mut sorted = kept.clone();
    sorted.sort_by(f64::total_cmp);
    let keep = ((sorted.len() as f64) * 0.99).ceil() as usize;
    let trimmed_mean = sorted[..keep.max(1).min(sorted.len())].iter().sum::<f64>() / keep.max(1) as f64;
    let min_value = sorted_logs.first().map(|s| s.exp()).unwrap_or(f64::NAN);
    Ok(Q3220Report {
        beta,
        n,
        estimate,
        log_quantiles,
        censored_fraction: censored as f64 / n_samples.max(1) as f64,
        trimmed_mean,
        min_value,
    })
}

/// Path on a nonuniform time grid, for functionals needing sub-grid resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct FinePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Exact Gaussian random-walk bridge with local variance rate π/(4β) (the ν_β
/// bridge) on 2^k intervals, then `depth` rounds of Lévy midpoint
/// refinement on the intervals within `window` of the running maximum.
pub fn sample_fine_bridge<R: Rng + ?Sized>(
    beta: f64,
    log2_points: u32,
    depth: u32,
    window: f64,
    rng: &mut R,
) -> Result<FinePath> {
    if !(beta > 0.0) {
        return domain("β must be positive");
    }
    let rate = PI / (4.0 * beta);
    let m = 1usize << log2_points;
    let h = TAU / m as f64;
    let mut walk = Vec::with_capacity(m + 1);
    walk.push(0.0);
    let sd = (rate * h).sqrt();
    for _ in 0..m {
        let z: f64 = StandardNormal.sample(rng);
        walk.push(walk.last().copied().unwrap_or(0.0) + sd * z);
    }
    let end = walk[m];
    let mut times: Vec<f64> = (0..=m).map(|j| h * j as f64).collect();
    let mut values: Vec<f64> = walk.iter().enumerate().map(|(j, w)| w - end * j as f64 / m as f64).collect();
    for _ in 0..depth {
        let (imax, _) = values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let centre = times[imax];
        let mut nt = Vec::with_capacity(times.len() * 2);
        let mut nv = Vec::with_capacity(times.len() * 2);
        for i in 0..times.len() - 1 {
            nt.push(times[i]);
            nv.push(values[i]);
            let (t0, t1) = (times[i], times[i + 1]);
            if (t0 - centre).abs() <= window || (t1 - centre).abs() <= window {
                let z: f64 = StandardNormal.sample(rng);
                nt.push(0.5 * (t0 + t1));
                nv.push(0.5 * (values[i] + values[i + 1]) + z * (rate * (t1 - t0) / 4.0).sqrt());
            }
        }
        nt.push(times[times.len() - 1]);
        nv.push(values[values.len() - 1]);
        times = nt;
        values = nv;
    }
    Ok(FinePath { times, values })
}

/// β^{−2}∫e^{(b − sup b)/β} by the trapezoid rule on the path's own time grid.
pub fn pitman_yor_functional(beta: f64, times: &[f64], values: &[f64]) -> f64 {
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = values.iter().map(|v| ((v - top) / beta).exp()).collect();
    let mut acc = 0.0;
    for i in 0..times.len() - 1 {
        acc += 0.5 * (e[i] + e[i + 1]) * (times[i + 1] - times[i]);
    }
    acc / (beta * beta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitmanYorRow {
    pub beta: f64,
    pub quantiles: Vec<(f64, f64)>,
    /// Kolmogorov distance to the law at β/2 on the same paths.
    pub ks_to_half: f64,
}

/// Functional laws at each β and β/2 over ν₁ paths.
pub fn pitman_yor_sweep(betas: &[f64], n_paths: usize, seed: u64, workers: usize) -> Result<Vec<PitmanYorRow>> {
    let per_path: Vec<Result<Vec<f64>>> = stats::par_map(n_paths, seed, workers, |_, rng| {
        let p = sample_fine_bridge(1.0, 14, 6, 0.2, rng)?;
        Ok(betas
            .iter()
            .flat_map(|&beta| [beta, 0.5 * beta])
            .map(|beta| pitman_yor_functional(beta, &p.times, &p.values))
            .collect())
    });
    let per_path: Vec<Vec<f64>> = per_path.into_iter().collect::<Result<_>>()?;
    let law = |j: usize| -> Vec<f64> { per_path.iter().map(|v| v[j]).collect() };
    Ok(betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| {
            let a = law(2 * i);
            let b = law(2 * i + 1);
            PitmanYorRow {
                beta,
                quantiles: MCEstimate::from_samples(&a, seed).quantiles,
                ks_to_half: stats::ks_distance(&a, &b),
            }
        })
        .collect())
}

/// Factors of the ν_{β,c,h} weight for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub energy: f64,
    pub det2: f64,
    pub diag_abs: f64,
    pub log_weight: f64,
}

impl WeightReport {
    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

/// exp(−(c/8π²)·energy)·(det₂|A_a|²)^c·|diag|^{16h}; the energy is skipped when c = 0.
pub fn weight_ch(
    sample: &NuBetaSample,
    w: &VirasoroWeight,
    table: Option<&EnergyTable>,
    cutoff: usize,
) -> Result<(WeightReport, welding::WeldingTriple)> {
    let triple = welding::weld(&sample.diffeo, cutoff)?;
    let diag_abs = triple.lambda.norm();
    let (energy, det2) = if w.c > 0.0 {
        let table = match table {
            Some(t) => t,
            None => return domain("c > 0 needs an energy expectation table"),
        };
        let e = operators::regularized_energy(&sample.path, table)?.value;
        let d = operators::det2_abs_a(&operators::build_blocks(&sample.diffeo, Spin::Antiperiodic, cutoff)?)?;
        (e, d.det2)
    } else {
        (0.0, 1.0)
    };
    let log_weight = -w.c / (8.0 * PI * PI) * energy + w.c * det2.ln() + 16.0 * w.h * diag_abs.ln();
    Ok((WeightReport { energy, det2, diag_abs, log_weight }, triple))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub rotation: f64,
    pub weight: WeightReport,
    pub lambda: C64,
    /// u_1..u_N.
    pub u: Vec<C64>,
    /// b_0..b_N.
    pub b: Vec<C64>,
    pub det_p: f64,
    pub det_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnsemble {
    pub beta: f64,
    pub weight: VirasoroWeight,
    pub samples: Vec<WeightedSample>,
    /// Weights divided by their empirical mean.
    pub normalized: Vec<f64>,
    pub ess: f64,
}

impl WeightedEnsemble {
    /// Weighted mean of a per-sample statistic.
    pub fn mean_of(&self, f: impl Fn(&WeightedSample) -> f64) -> f64 {
        let n = self.samples.len() as f64;
        self.samples.iter().zip(&self.normalized).map(|(s, w)| w * f(s)).sum::<f64>() / n
    }

    /// Weighted quantiles of a per-sample statistic.
    pub fn quantiles_of(&self, f: impl Fn(&WeightedSample) -> f64) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.samples.iter().zip(&self.normalized).map(|(s, &w)| (f(s), w)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        stats::QUANTILE_LEVELS
            .iter()
            .map(|&p| {
                let mut acc = 0.0;
                for &(x, w) in &pairs {
                    acc += w;
                    if acc >= p * total {
                        return (p, x);
                    }
                }
                (p, pairs.last().map(|q| q.0).unwrap_or(f64::NAN))
            })
            .collect()
    }
}

/// Settings shared by the weighted-ensemble experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_modes: usize,
    pub grid: usize,
    pub cutoff: usize,
    pub workers: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig { n_modes: 256, grid: 2048, cutoff: 64, workers: 1 }
    }
}

/// Self-normalized importance sample of ν_{β,c,h} with proposals from ν_β.
pub fn sample_nu_bch(
    beta: f64,
    w: &VirasoroWeight,
    n_samples: usize,
    seed: u64,
    cfg: &EnsembleConfig,
    table: Option<&EnergyTable>,
) -> Result<WeightedEnsemble> {
    let rows: Vec<Result<WeightedSample>> = stats::par_map(n_samples, seed, cfg.workers, |_, rng| {
        let s = sample_nu_beta(beta, cfg.n_modes, cfg.grid, rng)?;
        let (weight, triple) = weight_ch(&s, w, table, cfg.cutoff)?;
        let det_p = operators::det_abs_a_squared(&s.diffeo, Spin::Periodic, cfg.cutoff)?;
        let det_a = operators::det_abs_a_squared(&s.diffeo, Spin::Antiperiodic, cfg.cutoff)?;
        Ok(WeightedSample {
            rotation: s.rotation,
            weight,
            lambda: triple.lambda,
            u: triple.u,
            b: triple.b,
            det_p,
            det_a,
        })
    });
    let samples: Vec<WeightedSample> = rows.into_iter().collect::<Result<_>>()?;
    let top = samples.iter().map(|s| s.weight.log_weight).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = samples.iter().map(|s| (s.weight.log_weight - top).exp()).collect();
    let mean = raw.iter().sum::<f64>() / raw.len().max(1) as f64;
    let normalized: Vec<f64> = raw.iter().map(|x| x / mean).collect();
    let ess = {
        let s1: f64 = raw.iter().sum();
        let s2: f64 = raw.iter().map(|x| x * x).sum();
        s1 * s1 / s2
    };
    Ok(WeightedEnsemble { beta, weight: *w, samples, normalized, ess })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCell {
    pub n: usize,
    pub r: f64,
    /// ν{|u_n| > (n+1)R}.
    pub upper: f64,
    /// ν{|u_{n−1}| > nR}, with u_0 = 1.
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub ess: f64,
    pub u1_abs: Vec<(f64, f64)>,
    pub b0_abs: Vec<(f64, f64)>,
    pub diag_abs: Vec<(f64, f64)>,
    /// Samples outside ∏{|b_n| ≤ 1/n}·{|diag| ≤ 1}·∏{|u_n| ≤ n+1} by more than the slack.
    pub support_violations: usize,
    pub tails: Vec<TailCell>,
    /// (λ, ∫ȧ^{−iλ}dμ) with ȧ = |diag|.
    pub mellin: Vec<(f64, C64)>,
}

pub const SUPPORT_SLACK: f64 = 1e-2;

/// Count of coefficient bounds broken by more than `slack`.
pub fn support_violation(s: &WeightedSample, slack: f64) -> bool {
    let d = s.lambda.norm();
    if d > 1.0 + slack {
        return true;
    }
    if s.b.iter().enumerate().skip(1).any(|(n, b)| b.norm() > 1.0 / n as f64 + slack) {
        return true;
    }
    s.u.iter().enumerate().any(|(i, u)| u.norm() > (i + 2) as f64 + slack)
}

/// Per-β empirical laws, support counts, tail probes and Mellin transforms.
pub fn beta_sweep_limits(
    w: &VirasoroWeight,
    betas: &[f64],
    n_samples: usize,
    seed: u64,
    cfg: &EnsembleConfig,
    table_paths: usize,
) -> Result<Vec<SweepRow>> {
    if betas.windows(2).any(|p| p[1] >= p[0]) {
        return domain("β schedule must be decreasing");
    }
    let mut out = Vec::new();
    for (k, &beta) in betas.iter().enumerate() {
        let table = if w.c > 0.0 {
            Some(operators::build_energy_table(
                beta,
                cfg.n_modes,
                cfg.grid,
                &operators::default_schedule(),
                table_paths,
                seed ^ 0x5eed_0000 ^ k as u64,
                cfg.workers,
            )?)
        } else {
            None
        };
        let ens = sample_nu_bch(beta, w, n_samples, seed.wrapping_add(k as u64), cfg, table.as_ref())?;
        let prob = |f: &dyn Fn(&WeightedSample) -> bool| ens.mean_of(|s| if f(s) { 1.0 } else { 0.0 });
        let mut tails = Vec::new();
        for n in 2..=4usize {
            for r in [0.25, 0.5, 1.0] {
                let upper = prob(&|s| s.u.get(n - 1).map(|u| u.norm() > (n + 1) as f64 * r).unwrap_or(false));
                let lower = prob(&|s| {
                    let prev = if n == 1 { 1.0 } else { s.u.get(n - 2).map(|u| u.norm()).unwrap_or(0.0) };
                    prev > n as f64 * r
                });
                tails.push(TailCell { n, r, upper, lower });
            }
        }
        let mellin = [0.5, 1.0, 2.0]
            .iter()
            .map(|&l| {
                let re = ens.mean_of(|s| (-l * s.lambda.norm().ln()).cos());
                let im = ens.mean_of(|s| (-l * s.lambda.norm().ln()).sin());
                (l, C64::new(re, im))
            })
            .collect();
        out.push(SweepRow {
            beta,
            ess: ens.ess,
            u1_abs: ens.quantiles_of(|s| s.u[0].norm()),
            b0_abs: ens.quantiles_of(|s| s.b[0].norm()),
            diag_abs: ens.quantiles_of(|s| s.lambda.norm()),
            support_violations: ens.samples.iter().filter(|s| support_violation(s, SUPPORT_SLACK)).count(),
            tails,
            mellin,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_maps::Rotation;

    #[test]
    fn seed_determinism() {
        let a = sample_bridge(1.0, 32, 256, &mut stats::substream(3, 0)).unwrap();
        let b = sample_bridge(1.0, 32, 256, &mut stats::substream(3, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values()[0], 0.0);
        assert!(a.values()[256].abs() < 1e-12);
    }

    #[test]
    fn eval_matches_grid_and_sine_series() {
        let b = BridgePath::from_coeffs(vec![0.4, -0.2, 0.1], 1.0, 512).unwrap();
        let t = 1.2345;
        let direct: f64 = b.coeffs().iter().enumerate().map(|(i, c)| c * ((i + 1) as f64 * t / 2.0).sin()).sum();
        assert!((b.eval(t) - direct).abs() < 1e-7);
        assert_eq!(b.eval(TAU * 3.0 / 512.0 * 0.0), 0.0);
    }

    #[test]
    fn rotation_rn_is_one() {
        let b = sample_bridge(2.0, 64, 512, &mut stats::substream(1, 1)).unwrap();
        assert!((rn_derivative(&Rotation(0.7), &b).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_path_functionals() {
        let z = BridgePath::zero(1.0, 8, 256);
        let g = quad::grid(256);
        let mut t = g.clone();
        t.push(TAU);
        let v = vec![0.0; 257];
        assert!((pitman_yor_functional(0.5, &t, &v) - TAU / 0.25).abs() < 1e-12);
        // e^{2b}/(e^b)² with b = 0: S = nβ²·2π/(2π)²
        let s = question_3220_log_statistic(&z, 0.5, 2);
        assert!((s - 2.0 * 0.25 / TAU).abs() < 1e-14);
    }

    #[test]
    fn shift_exact_forms() {
        assert_eq!(shift_lhs_exact(0.0, 2), Some(0.0));
        assert!(shift_lhs_exact(0.0, 1).unwrap().abs() < 1e-15);
        assert!((shift_bound_value(1.0, 2) - PI.sqrt()).abs() < 1e-12);
        let h = CameronMartinShift::single_mode(3, 0.5).unwrap();
        assert!((h.norm_sq() - 0.25).abs() < 1e-14);
    }
}
