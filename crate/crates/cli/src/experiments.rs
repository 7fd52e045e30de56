use std::f64::consts::TAU;

use num_complex::Complex;
use rand::Rng;
use virlab::circle_maps::{
    central_charge_coefficient, cocycle_residual, left_action, virasoro_cocycle, CircleMap, FourierDiffeo,
    LogDerivativeJet, Moebius, TrigLogDiffeo, TrigVectorField,
};
use virlab::measures::{self, EnsembleConfig};
use virlab::operators::{self, MoebiusExponent, Spin, VirasoroWeight};
use virlab::stats::{self, mean_sd, MCEstimate, QUANTILE_LEVELS};
use virlab::welding;

use crate::config::RunConfig;
use crate::output::Table;
use crate::row;

type C64 = Complex<f64>;
pub type Outcome = virlab::Result<Vec<Table>>;

pub const EXPERIMENTS: [&str; 15] = [
    "sample",
    "weld",
    "blocks",
    "det",
    "su11-check",
    "s2-check",
    "cocycle-identity",
    "virasoro-check",
    "rn-check",
    "shift-bound",
    "q3220",
    "pitman-yor",
    "energy",
    "beta-sweep",
    "probe-13-6",
];

pub fn run(cfg: &RunConfig) -> Outcome {
    let mut tables = match cfg.experiment.as_str() {
        "sample" => sample(cfg),
        "weld" => weld(cfg),
        "blocks" => blocks(cfg),
        "det" => det(cfg),
        "su11-check" => su11_check(cfg),
        "s2-check" => s2_check(cfg),
        "cocycle-identity" => cocycle_identity(cfg),
        "virasoro-check" => virasoro_check(cfg),
        "rn-check" => rn_check(cfg),
        "shift-bound" => shift_bound(cfg),
        "q3220" => q3220(cfg),
        "pitman-yor" => pitman_yor(cfg),
        "energy" => energy(cfg),
        "beta-sweep" => beta_sweep(cfg),
        "probe-13-6" => probe_13_6(cfg),
        other => Err(virlab::Error::Domain(format!("unknown experiment {other}"))),
    }?;
    for t in &mut tables {
        t.meta.insert(0, ("experiment".into(), cfg.experiment.clone()));
        t.meta.insert(1, ("seed".into(), cfg.seed.to_string()));
        t.meta.insert(2, ("fingerprint".into(), cfg.fingerprint()));
    }
    Ok(tables)
}

fn rs_or(cfg: &RunConfig, default: &[f64]) -> Vec<f64> {
    let p = &cfg.params;
    p.r.map(|r| vec![r]).or_else(|| p.rs.clone()).unwrap_or_else(|| default.to_vec())
}

fn betas_or(cfg: &RunConfig, default: &[f64]) -> Vec<f64> {
    let p = &cfg.params;
    p.beta.map(|b| vec![b]).or_else(|| p.betas.clone()).unwrap_or_else(|| default.to_vec())
}

fn quantile_columns(prefix: &str) -> Vec<String> {
    QUANTILE_LEVELS.iter().map(|q| format!("{prefix}q{:02}", (q * 100.0).round() as u32)).collect()
}

fn table_with(name: &str, fixed: &[&str], extra: &[String]) -> Table {
    let mut cols: Vec<&str> = fixed.to_vec();
    cols.extend(extra.iter().map(|s| s.as_str()));
    Table::new(name, &cols)
}

fn spin_of(kind: Option<&str>) -> virlab::Result<Spin> {
    match kind.unwrap_or("a") {
        "a" | "antiperiodic" => Ok(Spin::Antiperiodic),
        "p" | "periodic" => Ok(Spin::Periodic),
        other => Err(virlab::Error::Domain(format!("kind must be a or p, got {other}"))),
    }
}

fn sample(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let beta = p.beta.unwrap_or(1.0);
    let modes = p.modes.unwrap_or(measures::DEFAULT_MODES);
    let grid = p.grid.unwrap_or(measures::DEFAULT_GRID);
    let n = p.samples.unwrap_or(10);
    let rows: Vec<virlab::Result<measures::NuBetaSample>> =
        stats::par_map(n, cfg.seed, cfg.workers, |_, rng| measures::sample_nu_beta(beta, modes, grid, rng));
    let mut t = Table::new("samples", &["index", "rotation", "b1", "b2", "b3", "b4", "h_norm_sq", "sup_b", "inf_b", "max_derivative"]);
    t.meta("beta", beta).meta("modes", modes).meta("M", grid);
    for (i, s) in rows.into_iter().enumerate() {
        let s = s?;
        let c = s.path.coeffs();
        let get = |k: usize| c.get(k).copied().unwrap_or(0.0);
        let v = s.path.values();
        let sup = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inf = v.iter().copied().fold(f64::INFINITY, f64::min);
        let dmax = s.diffeo.derivative_values().iter().copied().fold(0.0, f64::max);
        t.push(row![i, s.rotation, get(0), get(1), get(2), get(3), s.path.h_norm_sq(), sup, inf, dmax]);
    }
    Ok(vec![t])
}

fn weld(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    if p.samples.is_some() {
        return weld_samples(cfg);
    }
    let level = p.n.unwrap_or(1);
    let r = p.r.unwrap_or(0.5);
    let cutoff = p.cutoff.unwrap_or(256);
    let m = Moebius::from_r(r, p.phase.unwrap_or(0.0), level)?;
    let tr = welding::weld(&m, cutoff)?;
    let rep = welding::verify_weld(&m, &tr, 2 * cutoff);
    let from_dets = welding::diag_from_determinants(&m, cutoff)?;
    let target = (1.0 - r * r).powf(1.0 / level as f64);
    let mut t = Table::new(
        "weld",
        &["n", "r", "N", "lambda_re", "lambda_im", "abs_lambda", "target_abs_lambda", "diag_from_dets", "rel_diff", "roundtrip", "univalent", "area", "cond"],
    );
    t.push(row![
        level,
        r,
        cutoff,
        tr.lambda.re,
        tr.lambda.im,
        tr.lambda.norm(),
        target,
        from_dets,
        (from_dets - tr.lambda.norm()).abs() / tr.lambda.norm(),
        rep.roundtrip,
        rep.univalent,
        welding::area(&tr),
        tr.cond
    ]);
    let mut coef = Table::new("coefficients", &["k", "u_re", "u_im", "b_re", "b_im"]);
    for k in 0..tr.b.len().min(33) {
        let u = if k == 0 { C64::new(1.0, 0.0) } else { tr.u.get(k - 1).copied().unwrap_or_default() };
        coef.push(row![k, u.re, u.im, tr.b[k].re, tr.b[k].im]);
    }
    Ok(vec![t, coef])
}

fn weld_samples(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let beta = p.beta.unwrap_or(1.0);
    let n = p.samples.unwrap_or(100);
    let cutoff = p.cutoff.unwrap_or(64);
    let modes = p.modes.unwrap_or(256);
    let grid = p.grid.unwrap_or(2048);
    let rows: Vec<virlab::Result<_>> = stats::par_map(n, cfg.seed, cfg.workers, |_, rng| {
        let s = measures::sample_nu_beta(beta, modes, grid, rng)?;
        let tr = welding::weld(&s.diffeo, cutoff)?;
        let rep = welding::verify_weld(&s.diffeo, &tr, 4 * cutoff);
        let det_p = operators::det_abs_a_squared(&s.diffeo, Spin::Periodic, cutoff)?;
        let det_a = operators::det_abs_a_squared(&s.diffeo, Spin::Antiperiodic, cutoff)?;
        let from_dets = (det_p / det_a).powi(4);
        Ok((tr, rep, det_p, det_a, from_dets))
    });
    let slack = measures::SUPPORT_SLACK;
    let mut t = Table::new(
        "weld_samples",
        &[
            "index", "abs_lambda", "diag_from_dets", "rel_diff", "roundtrip", "univalent", "u1_abs", "b0_abs",
            "max_mode_area", "det_p", "det_a", "support_ok", "det_order_ok",
        ],
    );
    t.meta("beta", beta).meta("N", cutoff).meta("slack", slack);
    for (i, r) in rows.into_iter().enumerate() {
        let (tr, rep, det_p, det_a, from_dets) = r?;
        let d = tr.lambda.norm();
        let u1 = tr.u.first().map(|u| u.norm()).unwrap_or(0.0);
        let area = welding::max_mode_area(tr.lambda, &tr.u, &tr.b);
        let ok = d <= 1.0 + slack && u1 <= 2.0 + slack && area <= 1.0 + slack;
        t.push(row![
            i,
            d,
            from_dets,
            (from_dets - d).abs() / d,
            rep.roundtrip,
            rep.univalent,
            u1,
            tr.b[0].norm(),
            area,
            det_p,
            det_a,
            ok,
            det_p <= det_a * (1.0 + 1e-12)
        ]);
    }
    Ok(vec![t])
}

fn blocks(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let level = p.n.unwrap_or(1);
    let r = p.r.unwrap_or(0.5);
    let cutoff = p.cutoff.unwrap_or(32);
    let spin = spin_of(p.kind.as_deref())?;
    let m = Moebius::from_r(r, p.phase.unwrap_or(0.0), level)?;
    let op = operators::build_blocks(&m, spin, cutoff)?;
    let d = operators::det2_abs_a(&op)?;
    let mut t = Table::new("spectrum", &["k", "c_star_c_eigenvalue"]);
    t.meta("n", level).meta("r", r).meta("N", cutoff).meta("spin", format!("{spin:?}"));
    t.meta("unitarity_defect", format!("{:e}", op.unitarity_defect()));
    t.meta("det_abs_a_squared", format!("{:e}", d.det)).meta("det2", format!("{:e}", d.det2));
    for (k, ev) in op.c_squared_spectrum().iter().enumerate() {
        t.push(row![k, *ev]);
    }
    Ok(vec![t])
}

fn det(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let level = p.n.unwrap_or(1);
    let cutoff = p.cutoff.unwrap_or(128);
    let mut t = Table::new("det", &["n", "r", "N", "spin", "det", "det2", "closed_printed", "closed_corrected"]);
    for r in rs_or(cfg, &[0.2, 0.5, 0.8]) {
        let m = Moebius::from_r(r, p.phase.unwrap_or(0.0), level)?;
        for spin in [Spin::Antiperiodic, Spin::Periodic] {
            let d = operators::det2_abs_a(&operators::build_blocks(&m, spin, cutoff)?)?;
            t.push(row![
                level,
                r,
                cutoff,
                format!("{spin:?}"),
                d.det,
                d.det2,
                operators::moebius_det_closed_form(level, r, spin, MoebiusExponent::Printed),
                operators::moebius_det_closed_form(level, r, spin, MoebiusExponent::Corrected)
            ]);
        }
    }
    Ok(vec![t])
}

/// Antiperiodic and periodic Möbius determinants against both exponents.
pub struct Su11Row {
    pub level: usize,
    pub r: f64,
    pub det_a: f64,
    pub err_printed: f64,
    pub err_printed_half: f64,
    pub err_corrected: f64,
    pub err_corrected_half: f64,
    pub ratio_err: f64,
}

impl Su11Row {
    /// err(N) ≤ max(err(N/2)/2, 1e-12).
    pub fn halves(err: f64, half: f64) -> bool {
        err <= (0.5 * half).max(1e-12)
    }
}

pub fn su11_row(level: usize, r: f64, cutoff: usize) -> virlab::Result<Su11Row> {
    let m = Moebius::from_r(r, 0.0, level)?;
    let det_a = operators::det_abs_a_antiperiodic(&m, cutoff)?;
    let det_half = operators::det_abs_a_antiperiodic(&m, cutoff / 2)?;
    let det_p = operators::det_abs_a_periodic(&m, cutoff)?;
    let rel = |x: f64, e: MoebiusExponent| {
        let want = operators::moebius_det_closed_form(level, r, Spin::Antiperiodic, e);
        (x - want).abs() / want
    };
    let ratio_target = (1.0 - r * r).powf(1.0 / (4.0 * level as f64));
    Ok(Su11Row {
        level,
        r,
        det_a,
        err_printed: rel(det_a, MoebiusExponent::Printed),
        err_printed_half: rel(det_half, MoebiusExponent::Printed),
        err_corrected: rel(det_a, MoebiusExponent::Corrected),
        err_corrected_half: rel(det_half, MoebiusExponent::Corrected),
        ratio_err: (det_p / det_a - ratio_target).abs() / ratio_target,
    })
}

fn su11_check(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let cutoff = p.cutoff.unwrap_or(512);
    let levels = p.n.map(|n| vec![n]).unwrap_or_else(|| vec![1, 2, 3]);
    let mut t = Table::new(
        "su11",
        &[
            "n", "r", "N", "det_a", "target_printed", "rel_err_printed", "halving_printed", "target_corrected",
            "rel_err_corrected", "halving_corrected", "ratio_rel_err",
        ],
    );
    for level in levels {
        for r in rs_or(cfg, &[0.2, 0.5, 0.8]) {
            let row = su11_row(level, r, cutoff)?;
            t.push(row![
                level,
                r,
                cutoff,
                row.det_a,
                operators::moebius_det_closed_form(level, r, Spin::Antiperiodic, MoebiusExponent::Printed),
                row.err_printed,
                Su11Row::halves(row.err_printed, row.err_printed_half),
                operators::moebius_det_closed_form(level, r, Spin::Antiperiodic, MoebiusExponent::Corrected),
                row.err_corrected,
                Su11Row::halves(row.err_corrected, row.err_corrected_half),
                row.ratio_err
            ]);
        }
    }
    Ok(vec![t])
}

fn s2_check(cfg: &RunConfig) -> Outcome {
    let cutoff = cfg.params.cutoff.unwrap_or(512);
    let mut t = Table::new("s2", &["r", "N", "det", "target", "abs_err", "naive_section_det"]);
    for r in rs_or(cfg, &[0.2, 0.5, 0.8]) {
        let d = operators::commutator_det_s2(r, cutoff)?;
        let target = 1.0 / (1.0 - r * r);
        t.push(row![r, cutoff, d, target, (d - target).abs(), operators::commutator_det_s2_naive(r, cutoff.min(64))]);
    }
    Ok(vec![t])
}

/// Smooth diffeomorphism with three random cos and sin displacement modes.
pub fn random_fourier_map<R: Rng + ?Sized>(rng: &mut R) -> virlab::Result<FourierDiffeo> {
    let shift = rng.gen::<f64>() * TAU;
    let mut coef = || (0..3).map(|_| rng.gen_range(-0.12..0.12)).collect::<Vec<f64>>();
    let cos = coef();
    let sin = coef();
    FourierDiffeo::new(shift, cos, sin)
}

/// Level-n pair with w = a⁻¹b of the first and ζ = b̄a⁻¹ of the second.
pub fn moebius_pair(w: C64, zeta: C64, level: usize) -> virlab::Result<(Moebius, Moebius)> {
    Ok((Moebius::from_r(w.norm(), w.arg(), level)?, Moebius::from_r(zeta.norm(), -zeta.arg(), level)?))
}

pub fn random_disc_point<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> C64 {
    C64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * TAU)
}

fn cocycle_identity(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    match p.kind.as_deref().unwrap_or("bott") {
        "bott" => {
            let trials = p.trials.unwrap_or(100);
            let grid = p.grid.unwrap_or(4096);
            let res: Vec<virlab::Result<f64>> = stats::par_map(trials, cfg.seed, cfg.workers, |_, rng| {
                let (f, g, h) = (random_fourier_map(rng)?, random_fourier_map(rng)?, random_fourier_map(rng)?);
                cocycle_residual(&f, &g, &h, grid)
            });
            let mut t = Table::new("bott", &["trial", "residual"]);
            let mut worst = 0.0f64;
            let mut rows = Vec::new();
            for (i, r) in res.into_iter().enumerate() {
                let r = r?;
                worst = worst.max(r.abs());
                rows.push(row![i, r]);
            }
            t.meta("M", grid).meta("max_residual", format!("{worst:e}"));
            rows.into_iter().for_each(|r| t.push(r));
            Ok(vec![t])
        }
        "det" => {
            let trials = p.trials.unwrap_or(20);
            let level = p.n.unwrap_or(2);
            let cutoff = p.cutoff.unwrap_or(128);
            let res: Vec<virlab::Result<_>> = stats::par_map(trials, cfg.seed, cfg.workers, |_, rng| {
                let (w, z) = (random_disc_point(rng, 0.5), random_disc_point(rng, 0.5));
                let (m1, m2) = moebius_pair(w, z, level)?;
                let got = operators::moebius_cocycle_det(&m1, &m2, cutoff)?;
                let pr = operators::moebius_cocycle_closed_form(&m1, &m2, MoebiusExponent::Printed);
                let co = operators::moebius_cocycle_closed_form(&m1, &m2, MoebiusExponent::Corrected);
                Ok((w, z, got, pr, co))
            });
            let mut t = Table::new(
                "det_cocycle",
                &["trial", "w_re", "w_im", "zeta_re", "zeta_im", "det_re", "det_im", "err_printed", "err_corrected"],
            );
            t.meta("n", level).meta("N", cutoff);
            for (i, r) in res.into_iter().enumerate() {
                let (w, z, got, pr, co) = r?;
                t.push(row![i, w.re, w.im, z.re, z.im, got.re, got.im, (got - pr).norm(), (got - co).norm()]);
            }
            Ok(vec![t])
        }
        other => Err(virlab::Error::Domain(format!("kind must be bott or det, got {other}"))),
    }
}

fn virasoro_check(cfg: &RunConfig) -> Outcome {
    let top = cfg.params.n.unwrap_or(6) as i64;
    let mut t = Table::new("virasoro", &["n", "m", "cocycle_re", "cocycle_im", "central_coefficient", "target", "abs_err"]);
    for n in -top..=top {
        for m in -top..=top {
            let (a, b) = (TrigVectorField::l(n), TrigVectorField::l(m));
            let raw = virasoro_cocycle(&a, &b);
            let c = central_charge_coefficient(&a, &b);
            let target = if n + m == 0 { (n * (n * n - 1)) as f64 / 12.0 } else { 0.0 };
            t.push(row![n.to_string(), m.to_string(), raw.re, raw.im, c.re, target, (c - target).norm()]);
        }
    }
    Ok(vec![t])
}

/// The three maps of the RN experiment.
pub fn rn_maps() -> Vec<(&'static str, Box<dyn RnMap>)> {
    vec![
        ("moebius_r0.2", Box::new(Moebius::from_r(0.2, 0.0, 1).expect("valid r"))),
        ("cos0.15", Box::new(TrigLogDiffeo::new(vec![0.15], vec![], 0.0))),
        ("mixed", Box::new(TrigLogDiffeo::new(vec![0.1], vec![0.05], 0.0))),
    ]
}

pub trait RnMap: CircleMap + LogDerivativeJet + Send + Sync {}
impl<T: CircleMap + LogDerivativeJet + Send + Sync> RnMap for T {}

/// Per-sample (RN, printed RN, b₁, (Tb)₁, b₂, (Tb)₂).
pub fn rn_samples(phi: &dyn RnMap, beta: f64, n: usize, modes: usize, grid: usize, seed: u64, workers: usize) -> virlab::Result<Vec<[f64; 6]>> {
    struct Dyn<'a>(&'a dyn RnMap);
    impl CircleMap for Dyn<'_> {
        fn lift(&self, t: f64) -> f64 {
            self.0.lift(t)
        }
        fn derivative(&self, t: f64) -> f64 {
            self.0.derivative(t)
        }
        fn inverse_lift(&self, y: f64) -> f64 {
            self.0.inverse_lift(y)
        }
    }
    impl LogDerivativeJet for Dyn<'_> {
        fn log_jet(&self, t: f64) -> [f64; 3] {
            self.0.log_jet(t)
        }
    }
    let d = Dyn(phi);
    let rows: Vec<virlab::Result<[f64; 6]>> = stats::par_map(n, seed, workers, |_, rng| {
        let b = measures::sample_bridge(beta, modes, grid, rng)?;
        let rn = measures::rn_derivative(&d, &b)?;
        let printed = measures::rn_derivative_printed(&d, &b)?;
        let tb = left_action(&d, &b)?;
        Ok([rn, printed, b.coeffs()[0], tb.coeffs()[0], b.coeffs()[1], tb.coeffs()[1]])
    });
    rows.into_iter().collect()
}

fn rn_check(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let beta = p.beta.unwrap_or(1.0);
    let n = p.samples.unwrap_or(10_000);
    let modes = p.modes.unwrap_or(128);
    let grid = p.grid.unwrap_or(1024);
    let mut rn = Table::new("rn", &["phi", "mean", "stderr", "z", "printed_mean", "printed_stderr"]);
    rn.meta("beta", beta).meta("samples", n);
    let mut tr = Table::new("transfer", &["phi", "functional", "lhs", "rhs", "stderr", "z"]);
    for (k, (name, phi)) in rn_maps().into_iter().enumerate() {
        let rows = rn_samples(phi.as_ref(), beta, n, modes, grid, cfg.seed.wrapping_add(k as u64), cfg.workers)?;
        let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
        let e = MCEstimate::from_samples(&col(0), cfg.seed);
        let pe = MCEstimate::from_samples(&col(1), cfg.seed);
        rn.push(row![name, e.mean, e.stderr, (e.mean - 1.0) / e.stderr, pe.mean, pe.stderr]);
        for (g, (i, j)) in [("b1", (2, 3)), ("b2", (4, 5))] {
            let lhs = col(i);
            let rhs: Vec<f64> = rows.iter().map(|r| r[j] * r[0]).collect();
            let (ml, sl) = mean_sd(&lhs);
            let (mr, sr) = mean_sd(&rhs);
            let se = ((sl * sl + sr * sr) / n as f64).sqrt();
            tr.push(row![name, g, ml, mr, se, (ml - mr) / se]);
        }
    }
    Ok(vec![rn, tr])
}

fn shift_bound(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let ps = p.p.map(|x| vec![x]).unwrap_or_else(|| vec![1, 2]);
    let norms = p.h_norms.clone().unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
    let n = p.samples.unwrap_or(10_000);
    let mode = p.n.unwrap_or(1);
    let mut t = Table::new("shift_bound", &["beta", "h_norm", "p", "lhs", "stderr", "exact", "bound", "holds"]);
    t.meta("mode", mode).meta("samples", n);
    let mut k = 0u64;
    for beta in betas_or(cfg, &[0.1, 0.5, 1.0]) {
        for &h in &norms {
            for &pp in &ps {
                let shift = measures::CameronMartinShift::single_mode(mode, h)?;
                let r = measures::shift_bound_check(&shift, beta, pp, n, cfg.seed.wrapping_add(k), cfg.workers)?;
                k += 1;
                t.push(row![beta, h, pp, r.lhs.mean, r.lhs.stderr, r.exact, r.bound, r.holds]);
            }
        }
    }
    Ok(vec![t])
}

fn q3220(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let n = p.n.unwrap_or(1) as u32;
    let samples = p.samples.unwrap_or(2000);
    let modes = p.modes.unwrap_or(measures::DEFAULT_MODES);
    let grid = p.grid.unwrap_or(measures::DEFAULT_GRID);
    let mut t = table_with(
        "q3220",
        &["beta", "n", "mean", "stderr", "trimmed_mean", "censored_fraction", "min_value", "all_above_one"],
        &quantile_columns("log_"),
    );
    for (k, beta) in betas_or(cfg, &[1.0, 0.5, 0.25, 0.1]).into_iter().enumerate() {
        let r = measures::question_3220_estimator(beta, n, samples, modes, grid, cfg.seed.wrapping_add(k as u64), cfg.workers)?;
        let mut cells = row![
            beta,
            n,
            r.estimate.mean,
            r.estimate.stderr,
            r.trimmed_mean,
            r.censored_fraction,
            r.min_value,
            r.min_value > 1.0
        ];
        cells.extend(r.log_quantiles.iter().map(|q| q.1.into()));
        t.push(cells);
    }
    Ok(vec![t])
}

fn pitman_yor(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let n = p.samples.unwrap_or(400);
    let rows = measures::pitman_yor_sweep(&betas_or(cfg, &[0.1, 0.05, 0.025]), n, cfg.seed, cfg.workers)?;
    let mut t = table_with("pitman_yor", &["beta", "ks_to_half"], &quantile_columns(""));
    t.meta("paths", n);
    for r in rows {
        let mut cells = row![r.beta, r.ks_to_half];
        cells.extend(r.quantiles.iter().map(|q| q.1.into()));
        t.push(cells);
    }
    Ok(vec![t])
}

/// Energy table plus per-sample centered values on fresh paths.
pub struct EnergyRun {
    pub table: operators::EnergyTable,
    pub results: Vec<operators::EnergyResult>,
}

pub fn energy_run(beta: f64, modes: usize, grid: usize, table_paths: usize, samples: usize, seed: u64, workers: usize) -> virlab::Result<EnergyRun> {
    let schedule = operators::default_schedule();
    let table = operators::build_energy_table(beta, modes, grid, &schedule, table_paths, seed, workers)?;
    let results: Vec<virlab::Result<operators::EnergyResult>> =
        stats::par_map(samples, seed.wrapping_add(1), workers, |_, rng| {
            let b = measures::sample_bridge(beta, modes, grid, rng)?;
            operators::regularized_energy(&b, &table)
        });
    Ok(EnergyRun { table, results: results.into_iter().collect::<virlab::Result<_>>()? })
}

impl EnergyRun {
    /// Root mean square of the k-th residual over samples.
    pub fn rms_residuals(&self) -> Vec<f64> {
        let k = self.results.first().map(|r| r.residuals.len()).unwrap_or(0);
        (0..k)
            .map(|i| (self.results.iter().map(|r| r.residuals[i].powi(2)).sum::<f64>() / self.results.len() as f64).sqrt())
            .collect()
    }

    pub fn monotone_fraction(&self) -> f64 {
        self.results.iter().filter(|r| r.monotone).count() as f64 / self.results.len().max(1) as f64
    }
}

fn energy(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let beta = p.beta.unwrap_or(1.0);
    let run = energy_run(
        beta,
        p.modes.unwrap_or(128),
        p.grid.unwrap_or(1024),
        p.table_paths.unwrap_or(400),
        p.samples.unwrap_or(400),
        cfg.seed,
        cfg.workers,
    )?;
    let values: Vec<f64> = run.results.iter().map(|r| r.value).collect();
    let e = MCEstimate::from_samples(&values, cfg.seed);
    let mut s = Table::new("energy", &["index", "value", "monotone", "last_residual"]);
    s.meta("beta", beta).meta("mean", format!("{:e}", e.mean)).meta("stderr", format!("{:e}", e.stderr));
    s.meta("table_stderr", format!("{:e}", run.table.total_stderr));
    s.meta("monotone_fraction", run.monotone_fraction());
    for (i, r) in run.results.iter().enumerate() {
        s.push(row![i, r.value, r.monotone, r.residuals.last().copied().unwrap_or(f64::NAN)]);
    }
    let mut lv = Table::new("levels", &["level", "delta", "table_mean", "rms_residual"]);
    let rms = run.rms_residuals();
    for (k, (d, m)) in run.table.schedule.iter().zip(&run.table.means).enumerate() {
        let r = if k == 0 { f64::NAN } else { rms[k - 1] };
        lv.push(row![k + 1, *d, *m, r]);
    }
    Ok(vec![s, lv])
}

fn beta_sweep(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let w = VirasoroWeight::new(p.c.unwrap_or(0.0), p.h.unwrap_or(0.0))?;
    let ens = EnsembleConfig {
        n_modes: p.modes.unwrap_or(256),
        grid: p.grid.unwrap_or(2048),
        cutoff: p.cutoff.unwrap_or(64),
        workers: cfg.workers,
    };
    let betas = p.betas.clone().or(p.beta.map(|b| vec![b])).unwrap_or_else(|| vec![1.0, 0.5, 0.25]);
    let rows = measures::beta_sweep_limits(&w, &betas, p.samples.unwrap_or(200), cfg.seed, &ens, p.table_paths.unwrap_or(200))?;
    let mut extra = quantile_columns("u1_");
    extra.extend(quantile_columns("b0_"));
    extra.extend(quantile_columns("diag_"));
    let mut s = table_with("sweep", &["beta", "ess", "support_violations"], &extra);
    s.meta("c", w.c).meta("h", w.h);
    let mut tails = Table::new("tails", &["beta", "n", "R", "upper", "lower", "upper_le_lower"]);
    let mut mellin = Table::new("mellin", &["beta", "lambda", "re", "im"]);
    for r in rows {
        let mut cells = row![r.beta, r.ess, r.support_violations];
        for q in [&r.u1_abs, &r.b0_abs, &r.diag_abs] {
            cells.extend(q.iter().map(|x| x.1.into()));
        }
        s.push(cells);
        for c in &r.tails {
            tails.push(row![r.beta, c.n, c.r, c.upper, c.lower, c.upper <= c.lower]);
        }
        for (l, v) in &r.mellin {
            mellin.push(row![r.beta, *l, v.re, v.im]);
        }
    }
    Ok(vec![s, tails, mellin])
}

fn probe_13_6(cfg: &RunConfig) -> Outcome {
    let p = &cfg.params;
    let cutoff = p.cutoff.unwrap_or(32);
    let levels = p.n.map(|n| vec![n]).unwrap_or_else(|| vec![1, 2, 3]);
    let mut t = Table::new("probe", &["source", "n", "r", "index", "min_eigenvalue", "nonnegative"]);
    t.meta("N", cutoff);
    for &level in &levels {
        for r in rs_or(cfg, &[0.2, 0.5, 0.8]) {
            let m = Moebius::from_r(r, p.phase.unwrap_or(0.0), level)?;
            let v = operators::operator_inequality_probe(&m, cutoff)?;
            t.push(row!["moebius", level, r, 0usize, v, v >= -1e-10]);
        }
    }
    let beta = p.beta.unwrap_or(1.0);
    let n = p.samples.unwrap_or(20);
    let rows: Vec<virlab::Result<f64>> = stats::par_map(n, cfg.seed, cfg.workers, |_, rng| {
        let s = measures::sample_nu_beta(beta, p.modes.unwrap_or(128), p.grid.unwrap_or(1024), rng)?;
        operators::operator_inequality_probe(&s.diffeo, cutoff)
    });
    for (i, v) in rows.into_iter().enumerate() {
        let v = v?;
        t.push(row!["nu_beta", 1usize, f64::NAN, i, v, v >= -1e-10]);
    }
    Ok(vec![t])
}
