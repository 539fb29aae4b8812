//! One function per subcommand. Each returns its tables and verdict checks;
//! nothing here touches the file system.

use std::collections::BTreeMap;

use windstat::correlators::{analytic_c2, f2_limit, mc_correlator, unfolded_c2, unfolding_sup_distance, CorrelatorConfig};
use windstat::distribution::{gaussian_limit_report, mc_winding_histogram, tv_distance, winding_pmf};
use windstat::ensembles::{draw, SphericalSpectrum, SymmetryClass};
use windstat::error::Error;
use windstat::generators::{analytic_z_aiii, analytic_z_aiii_limit, mc_generator, GeneratorConfig};
use windstat::kitaev::{dispersion_and_gap, mu_scan, phase_point, scan_flips, KitaevParams, GAP_TOL};
use windstat::loops::LoopFunctions;
use windstat::mc::{run_streams, McPlan};
use windstat::report::{self, num, CsvTable};
use windstat::rng::StreamKey;
use windstat::winding::{winding_both_routes, WindingRecord};

use crate::config::{Command, RunConfig};
use crate::output::RunOutput;
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    match cfg.command {
        Command::Winding => winding(cfg),
        Command::Dist => dist(cfg),
        Command::Corr => corr(cfg),
        Command::Unfold => unfold(cfg),
        Command::Gen => gen(cfg),
        Command::Kitaev => kitaev(cfg),
    }
}

fn numerical(context: impl std::fmt::Display, e: Error) -> CliError {
    CliError::Numerical(format!("{context}: {e}"))
}

fn plan(cfg: &RunConfig) -> McPlan {
    McPlan::new(cfg.seed, cfg.streams, cfg.trials)
}

/// First global draw id of each stream.
fn stream_offsets(plan: &McPlan) -> Vec<u64> {
    let mut acc = 0;
    plan.chunks()
        .iter()
        .map(|&(_, n)| {
            let start = acc;
            acc += n;
            start
        })
        .collect()
}

enum DrawOutcome {
    Done { rec: WindingRecord, spectrum: SphericalSpectrum, resamples: u32 },
    /// Route mismatch or an unquantized contour value.
    Violation(String),
    Failed(Error),
}

fn winding_draw(cfg: &RunConfig, n: usize, key: StreamKey, i: u64) -> DrawOutcome {
    let d = match draw(n, cfg.class, key, i) {
        Ok(d) => d,
        Err(e) => return DrawOutcome::Failed(e),
    };
    match winding_both_routes(&d.sample, &d.spectrum, &cfg.loop_fns, cfg.grid) {
        Ok(rec) => DrawOutcome::Done { rec, spectrum: d.spectrum, resamples: d.resamples },
        Err(e @ (Error::RouteMismatch { .. } | Error::NotQuantized { .. })) => DrawOutcome::Violation(e.to_string()),
        Err(e) => DrawOutcome::Failed(e),
    }
}

fn winding(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let plan = plan(cfg);
    let offsets = stream_offsets(&plan);
    for &n in &cfg.n {
        let per_stream = run_streams(&plan, |key, draws| (0..draws).map(|i| winding_draw(cfg, n, key, i)).collect::<Vec<_>>());
        let mut records = Vec::new();
        let mut spectra = Vec::new();
        let mut violations = Vec::new();
        let mut resamples = 0u64;
        for (s, outcomes) in per_stream.into_iter().enumerate() {
            for (i, o) in outcomes.into_iter().enumerate() {
                let id = offsets[s] + i as u64;
                match o {
                    DrawOutcome::Done { rec, spectrum, resamples: r } => {
                        resamples += u64::from(r);
                        records.push((id, rec));
                        spectra.push((id, spectrum));
                    }
                    DrawOutcome::Violation(msg) => violations.push(format!("draw {id}: {msg}")),
                    DrawOutcome::Failed(e) => return Err(numerical(format!("N={n}, draw {id}"), e)),
                }
            }
        }
        let max_residual = records.iter().map(|(_, r)| r.residual).fold(0.0, f64::max);
        let quantized = records.iter().all(|(_, r)| r.residual <= cfg.tolerances.quantization)
            && !violations.iter().any(|v| v.contains("not quantized"));
        let mismatches: Vec<&String> = violations.iter().filter(|v| v.contains("disagree")).collect();
        out.check(
            format!("quantized_N{n}"),
            quantized,
            format!("max residual {max_residual:.3e} over {} draws", records.len()),
        );
        out.check(
            format!("routes_agree_N{n}"),
            mismatches.is_empty(),
            if mismatches.is_empty() { "contour and count routes agree on every draw".to_string() } else { format!("{mismatches:?}") },
        );
        let mut t = report::winding_table(records.iter().map(|(id, r)| (*id, r)));
        t.meta("N", n).meta("loop", loop_name(&cfg.loop_fns));
        out.table(format!("winding_N{n}.csv"), t);
        if cfg.spectra {
            let mut t = report::spectra_table(spectra.iter().map(|(id, s)| (*id, s)));
            t.meta("N", n);
            out.table(format!("spectra_N{n}.csv"), t);
        }
        let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
        for (_, r) in &records {
            *counts.entry(r.w).or_default() += 1;
        }
        // The exact law is for β = 2 on the trig loop.
        let exact = (cfg.class == SymmetryClass::AIII && cfg.loop_fns.is_trig())
            .then(|| winding_pmf(n))
            .transpose()
            .map_err(|e| numerical(format!("N={n}"), e))?;
        let mut t = CsvTable::new(["W", "count", "frequency", "P_exact"]);
        t.meta("N", n);
        let total = records.len().max(1) as f64;
        for (&w, &c) in &counts {
            let p = exact.as_ref().map(|pmf| num(pmf.prob(w))).unwrap_or_default();
            t.row(vec![w.to_string(), c.to_string(), num(c as f64 / total), p]);
        }
        out.table(format!("winding_freq_N{n}.csv"), t);
        out.note(
            format!("N{n}"),
            serde_json::json!({
                "draws": records.len(),
                "max_residual": max_residual,
                "resamples": resamples,
                "subtracted_zeros": records.iter().map(|(_, r)| r.subtracted_zeros).sum::<usize>(),
                "violations": violations,
            }),
        );
    }
    Ok(out)
}

fn loop_name(lp: &LoopFunctions) -> &'static str {
    if lp.is_trig() {
        "trig"
    } else {
        "fourier"
    }
}

fn dist(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    for &n in &cfg.n {
        let pmf = winding_pmf(n).map_err(|e| numerical(format!("N={n}"), e))?;
        let total: f64 = pmf.probs.iter().sum();
        let asym = pmf.support.iter().map(|&w| (pmf.prob(w) - pmf.prob(-w)).abs()).fold(0.0, f64::max);
        out.check(format!("normalized_N{n}"), (total - 1.0).abs() < 1e-12, format!("Σ P = {total}"));
        out.check(format!("symmetric_N{n}"), asym < 1e-12, format!("max |P(W) − P(−W)| = {asym:.2e}"));
        let hist = if cfg.trials > 0 && n <= cfg.histogram_max_n {
            let h = mc_winding_histogram(n, &plan(cfg)).map_err(|e| numerical(format!("N={n}"), e))?;
            let tv = tv_distance(&pmf, &h);
            out.check(
                format!("tv_N{n}"),
                tv < cfg.tolerances.tv,
                format!("TV distance {tv:.4} at {} draws", h.trials),
            );
            Some(h)
        } else {
            None
        };
        let mut t = report::pmf_table(&pmf, hist.as_ref());
        t.meta("N", n).meta("mean", pmf.mean).meta("variance", pmf.variance);
        out.table(format!("dist_pmf_N{n}.csv"), t);
    }
    let limit_ns: Vec<usize> = cfg.n.iter().copied().filter(|&n| n >= 2).collect();
    let rows = gaussian_limit_report(&limit_ns).map_err(|e| numerical("Gaussian limit", e))?;
    let mut t = CsvTable::new(["N", "variance", "predicted_variance", "ratio", "sup_distance"]);
    for r in &rows {
        t.row(vec![r.n.to_string(), num(r.variance), num(r.predicted_variance), num(r.ratio), num(r.sup_distance)]);
    }
    out.table("dist_gaussian_limit.csv", t);
    let large: Vec<_> = rows.iter().filter(|r| r.n >= 400).collect();
    if !large.is_empty() {
        let worst = large.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
        out.check(
            "variance_ratio_large_N",
            worst < cfg.tolerances.variance_ratio,
            format!("max |ratio − 1| at N ≥ 400: {worst:.4}"),
        );
    }
    let mut sorted = rows.clone();
    sorted.sort_by_key(|r| r.n);
    sorted.dedup_by_key(|r| r.n);
    let monotone = sorted.windows(2).all(|w| w[1].variance > w[0].variance);
    out.check("variance_increasing", monotone, "variance of W increases with N");
    Ok(out)
}

/// Closed-form value where one is known: `C₁ = 0` and the two-point formula,
/// both for β = 2 on the trig loop.
fn analytic_correlator(cfg: &RunConfig, n: usize, pts: &[f64]) -> Option<f64> {
    if cfg.class != SymmetryClass::AIII || !cfg.loop_fns.is_trig() {
        return None;
    }
    match pts {
        [_] => Some(0.0),
        [p1, p2] => {
            let c = analytic_c2(n, *p1, *p2);
            (!c.diagonal).then_some(c.value)
        }
        _ => None,
    }
}

fn corr(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let z = cfg.tolerances.z_score;
    for &n in &cfg.n {
        let cc = CorrelatorConfig {
            n,
            class: cfg.class,
            loop_fns: cfg.loop_fns.clone(),
            point_sets: cfg.points.clone(),
            estimator: cfg.estimator,
        };
        let est = mc_correlator(&cc, &plan(cfg)).map_err(|e| numerical(format!("N={n}"), e))?;
        let mut rows = Vec::new();
        for e in est {
            let exact = analytic_correlator(cfg, n, &e.points);
            if let Some(a) = exact {
                // N = 1 two-point estimates can be exact with zero spread.
                let (se, se_im) = (e.stderr.max(1e-12), e.stderr_im.max(1e-12));
                let ok = (e.mean.re - a).abs() <= z * se && e.mean.im.abs() <= z * se_im && e.is_healthy();
                out.check(
                    format!("N{n}_points{:?}", e.points),
                    ok,
                    format!("{:.5}{:+.5}i ± {:.5} vs {a:.5}, skipped {}", e.mean.re, e.mean.im, e.stderr, e.skipped),
                );
            }
            rows.push((e, exact));
        }
        let mut t = report::correlator_table(&rows);
        t.meta("N", n).meta("estimator", serde_json::to_string(&cfg.estimator).expect("estimator serializes"));
        out.table(format!("corr_N{n}.csv"), t);
    }
    Ok(out)
}

fn unfold(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let (lo, hi) = cfg.delta_range;
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for i in 0..cfg.grid {
            let delta = lo + (hi - lo) * i as f64 / (cfg.grid - 1) as f64;
            rows.push((unfolded_c2(n, cfg.alpha, delta, 0.0), f2_limit(cfg.alpha, delta, 0.0)));
        }
    }
    let mut t = report::unfold_table(&rows);
    t.meta("delta_range", format!("[{lo}, {hi}]"));
    out.table("unfold.csv", t);
    let mut t = CsvTable::new(["N", "alpha", "sup_distance", "at_delta"]);
    let mut dists = Vec::new();
    for &n in &cfg.n {
        let d = unfolding_sup_distance(n, cfg.alpha, lo, hi, 4501);
        t.row(vec![n.to_string(), num(d.alpha), num(d.sup_distance), num(d.at_delta)]);
        dists.push((n, d.sup_distance));
    }
    out.table("unfold_distance.csv", t);
    dists.sort_by_key(|d| d.0);
    let decreasing = dists.windows(2).all(|w| w[1].1 < w[0].1);
    out.check(
        "sup_distance_decreasing",
        decreasing,
        dists.iter().map(|(n, d)| format!("{n}:{d:.3e}")).collect::<Vec<_>>().join(" "),
    );
    Ok(out)
}

fn gen(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let z = cfg.tolerances.z_score;
    let k = cfg.points[0].len();
    if cfg.points.iter().chain(&cfg.q).any(|s| s.len() != k) {
        return Err(CliError::Usage("all q and p sets need the same length".into()));
    }
    for &n in &cfg.n {
        let mut rows = Vec::new();
        for (j, p) in cfg.points.iter().enumerate() {
            let q = if cfg.q.len() == 1 { &cfg.q[0] } else { &cfg.q[j] };
            let gc = GeneratorConfig {
                n,
                class: cfg.class,
                loop_fns: cfg.loop_fns.clone(),
                q: q.clone(),
                p: p.clone(),
                estimator: cfg.estimator,
            };
            let ctx = format!("N={n}, q={q:?}, p={p:?}");
            // Each row gets its own seed so rows are independent.
            let row_plan = McPlan::new(cfg.seed.wrapping_add(j as u64), cfg.streams, cfg.trials);
            let v = mc_generator(&gc, &row_plan).map_err(|e| numerical(&ctx, e))?;
            let exact = if cfg.class == SymmetryClass::AIII {
                match analytic_z_aiii(&cfg.loop_fns, q, p, n) {
                    Ok(a) => Some(a),
                    Err(Error::NearCoincident(_)) => Some(analytic_z_aiii_limit(&cfg.loop_fns, q, p, n).map_err(|e| numerical(&ctx, e))?),
                    Err(e) => return Err(numerical(&ctx, e)),
                }
            } else {
                None
            };
            if let (Some(a), Some((se, se_im))) = (exact, v.stderr) {
                let (se, se_im) = (se.max(1e-12), se_im.max(1e-12));
                let ok = (v.value.re - a.re).abs() <= z * se && (v.value.im - a.im).abs() <= z * se_im;
                out.check(
                    format!("N{n}_q{q:?}_p{p:?}"),
                    ok,
                    format!("{:.5}{:+.5}i ± {se:.5} vs {:.5}{:+.5}i", v.value.re, v.value.im, a.re, a.im),
                );
            }
            rows.push((v, exact));
        }
        let mut t = report::generator_table(k, &rows);
        t.meta("N", n);
        out.table(format!("gen_N{n}.csv"), t);
    }
    Ok(out)
}

fn kitaev(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let ks = &cfg.kitaev;
    let mut t = CsvTable::new(["t", "mu", "delta", "W", "gap", "phase"]);
    for &hop in &ks.t {
        let params = KitaevParams::new(hop, ks.mu, ks.delta);
        let ctx = format!("t={hop}");
        let pt = phase_point(&params).map_err(|e| numerical(&ctx, e))?;
        let phase = match pt.w {
            None => "transition",
            Some(0) => "trivial",
            Some(_) => "topological",
        };
        t.row(vec![num(hop), num(ks.mu), num(ks.delta), pt.w.map(|w| w.to_string()).unwrap_or_default(), num(pt.gap), phase.into()]);
        let ok = match pt.w {
            None => pt.gap <= GAP_TOL,
            Some(w) => w.abs() == i64::from(params.is_topological()),
        };
        out.check(format!("phase_t{hop}"), ok, format!("W = {:?}, gap = {:.3e}", pt.w, pt.gap));
        let disp = dispersion_and_gap(&params, cfg.grid).map_err(|e| numerical(&ctx, e))?;
        let mut bands = report::kitaev_band_table(&params, &disp);
        bands.meta("t", hop).meta("mu", ks.mu).meta("delta", ks.delta).meta("gap", disp.gap);
        out.table(format!("kitaev_bands_t{hop}.csv"), bands);
    }
    if !ks.t.is_empty() {
        out.table("kitaev_phases.csv", t);
    }
    if let Some((lo, hi, steps)) = ks.scan {
        let hop = ks.t.last().copied().unwrap_or(1.0);
        let scan = mu_scan(hop, ks.delta, lo, hi, steps).map_err(|e| numerical("μ-scan", e))?;
        let mut t = CsvTable::new(["mu", "W", "gap"]);
        t.meta("t", hop).meta("delta", ks.delta);
        for p in &scan {
            t.row(vec![num(p.mu), p.w.map(|w| w.to_string()).unwrap_or_default(), num(p.gap)]);
        }
        out.table("kitaev_scan.csv", t);
        let flips = scan_flips(&scan);
        let step = (hi - lo) / steps.max(1) as f64;
        let expected: Vec<f64> = [-2.0 * hop.abs(), 2.0 * hop.abs()].into_iter().filter(|b| (lo..=hi).contains(b)).collect();
        let located = flips.len() == expected.len() && flips.iter().zip(&expected).all(|(f, b)| (f - b).abs() <= step);
        out.check("scan_flips_at_boundary", located, format!("flips at {flips:?}, expected {expected:?}"));
        out.note("scan_flips", flips);
    }
    Ok(out)
}
