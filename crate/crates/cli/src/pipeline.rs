//! Experiment orchestration. Each stage appends report sections and tables to
//! a [`RunOutput`]; verbs are compositions of stages.

use std::collections::BTreeMap;

use humanrate_core::distinguish::{
    error_probability_empirical, min_detectable_noise, optimal_predictor,
};
use humanrate_core::noise::{
    build_all_noise, compare_noise, fit_noise_model, resample_noise, NoiseDistribution,
};
use humanrate_core::propagation::{
    borderline_cases, convergence_analysis, overlap, predictor_family, rmse_mc, MetricDistribution,
    Predictor, RmseModel, PREDICTOR_FAMILY_SIZE,
};
use humanrate_core::stats::{indirect_mc_battery, percentile_precision, TestKind};
use humanrate_core::{
    ci_length_delta, fit_gaussian_mle, generate_pdfrating, generate_rerating, tau_transform,
    Error as CoreError, EstimationSettings, FittedRating, NoiseFamily, NoiseKind, NoiseModel,
    PairKey, PdfRating, RatingDistribution, ReRatingSample, SeedStream,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::csvio::{
    ingest_pdfrating_csv, ingest_rerating_csv, pdfrating_rows, rerating_rows, PDFRATING_HEADER,
    RERATING_HEADER,
};
use crate::error::Result;
use crate::output::{cell, histogram_rows, RunOutput, Table};

/// Stream tags for the master seed, disjoint from the library's own.
mod tags {
    pub const RMSE: u64 = 101;
    pub const BORDERLINE: u64 = 102;
    pub const CONVERGENCE: u64 = 103;
    pub const NOISE_SEARCH: u64 = 104;
    pub const INDIRECT: u64 = 105;
    pub const RESAMPLE: u64 = 106;
}

/// Quantile grid for percentile-precision curves.
pub fn q_grid() -> Vec<f64> {
    (0..=20).map(|i| f64::from(i) / 20.0).collect()
}

fn master(cfg: &RunConfig) -> SeedStream {
    SeedStream::new(cfg.seed)
}

pub fn load_rerating(cfg: &RunConfig, out: &mut RunOutput) -> Result<Vec<ReRatingSample>> {
    match &cfg.rerating {
        Some(path) => {
            let ing = ingest_rerating_csv(path)?;
            out.warnings.extend(ing.warnings);
            Ok(ing.records)
        }
        None => Ok(generate_rerating(&cfg.cohort_spec(false))?),
    }
}

pub fn load_pdfrating(cfg: &RunConfig, out: &mut RunOutput) -> Result<Vec<PdfRating>> {
    match &cfg.pdfrating {
        Some(path) => {
            let ing = ingest_pdfrating_csv(path)?;
            out.warnings.extend(ing.warnings);
            Ok(ing.records)
        }
        None => Ok(generate_pdfrating(&cfg.cohort_spec(true))?),
    }
}

fn fit_rerating(data: &[ReRatingSample], s: &EstimationSettings) -> Result<Vec<FittedRating>> {
    Ok(data
        .iter()
        .map(|x| fit_gaussian_mle(x, s))
        .collect::<humanrate_core::Result<_>>()?)
}

fn fit_pdf(data: &[PdfRating], s: &EstimationSettings) -> Result<Vec<FittedRating>> {
    Ok(data
        .iter()
        .map(|x| fit_gaussian_mle(&tau_transform(x), s))
        .collect::<humanrate_core::Result<_>>()?)
}

fn constant_fraction(data: &[ReRatingSample]) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    data.iter().filter(|s| s.is_constant()).count() as f64 / data.len() as f64
}

pub fn run_synth(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::new("synth");
    let rr = generate_rerating(&cfg.cohort_spec(false))?;
    let pdf = generate_pdfrating(&cfg.cohort_spec(true))?;
    out.section(
        "cohort",
        json!({
            "rerating_spec": cfg.cohort_spec(false),
            "pdf_spec": cfg.cohort_spec(true),
            "pairs": rr.len(),
            "constant_fraction": constant_fraction(&rr),
        }),
    )?;
    out.tables.push(Table {
        name: "rerating".into(),
        header: RERATING_HEADER.iter().map(|s| s.to_string()).collect(),
        rows: rerating_rows(&rr),
    });
    out.tables.push(Table {
        name: "pdfrating".into(),
        header: PDFRATING_HEADER.iter().map(|s| s.to_string()).collect(),
        rows: pdfrating_rows(&pdf),
    });
    Ok(out)
}

const FIT_HEADER: [&str; 11] = [
    "method",
    "user_id",
    "item_id",
    "n",
    "mu",
    "mu_low",
    "mu_high",
    "sigma",
    "sigma_low",
    "sigma_high",
    "informative",
];

fn fit_row(method: &str, f: &FittedRating) -> Vec<String> {
    vec![
        method.into(),
        f.key.user.clone(),
        f.key.item.clone(),
        cell(f.distribution.n),
        cell(f.mu_est.point),
        cell(f.mu_est.ci_low),
        cell(f.mu_est.ci_high),
        cell(f.sigma_est.point),
        cell(f.sigma_est.ci_low),
        cell(f.sigma_est.ci_high),
        cell(f.mu_est.informative),
    ]
}

fn fit_summary(fits: &[FittedRating]) -> serde_json::Value {
    let n = fits.len().max(1) as f64;
    json!({
        "pairs": fits.len(),
        "informative": fits.iter().filter(|f| f.mu_est.informative).count(),
        "mean_sigma": fits.iter().map(|f| f.distribution.sigma).sum::<f64>() / n,
        "mean_mu_ci_length": fits.iter().map(|f| f.mu_est.length()).sum::<f64>() / n,
    })
}

pub fn run_fit(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::new("fit");
    let s = cfg.estimation();
    let rr = load_rerating(cfg, &mut out)?;
    let pdf = load_pdfrating(cfg, &mut out)?;
    let rf = fit_rerating(&rr, &s)?;
    let pf = fit_pdf(&pdf, &s)?;
    let mut t = Table::new("fits", &FIT_HEADER);
    rf.iter().for_each(|f| t.push(fit_row("rerating", f)));
    pf.iter().for_each(|f| t.push(fit_row("pdf", f)));
    let mut rerating = fit_summary(&rf);
    rerating["constant_fraction"] = json!(constant_fraction(&rr));
    out.section(
        "fits",
        json!({ "rerating": rerating, "pdf": fit_summary(&pf) }),
    )?;
    out.tables.push(t);
    Ok(out)
}

#[derive(Default, Clone, Copy)]
struct Tally {
    rejected: usize,
    not_rejected: usize,
    skipped: usize,
}

impl Tally {
    fn add(&mut self, rejected: Option<bool>) {
        match rejected {
            Some(true) => self.rejected += 1,
            Some(false) => self.not_rejected += 1,
            None => self.skipped += 1,
        }
    }

    fn json(&self) -> serde_json::Value {
        let tested = self.rejected + self.not_rejected;
        json!({
            "rejected": self.rejected,
            "not_rejected": self.not_rejected,
            "skipped": self.skipped,
            "rejected_fraction": if tested == 0 { 0.0 } else { self.rejected as f64 / tested as f64 },
        })
    }

    fn row(&self, prefix: Vec<String>) -> Vec<String> {
        let tested = self.rejected + self.not_rejected;
        let frac = if tested == 0 {
            0.0
        } else {
            self.rejected as f64 / tested as f64
        };
        let mut r = prefix;
        r.extend([
            cell(self.rejected),
            cell(self.not_rejected),
            cell(self.skipped),
            cell(frac),
        ]);
        r
    }
}

fn model_params(m: &NoiseModel) -> (&'static str, f64, f64) {
    match *m {
        NoiseModel::Gaussian { mean, std } => ("gaussian", mean, std),
        NoiseModel::PowerLaw { exponent, x_min } => ("powerlaw", exponent, x_min),
    }
}

pub fn run_q1(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::new("q1");
    let s = cfg.estimation();
    let rr = load_rerating(cfg, &mut out)?;
    let pdf = load_pdfrating(cfg, &mut out)?;
    let rmap: BTreeMap<&PairKey, &ReRatingSample> = rr.iter().map(|x| (x.key(), x)).collect();
    let pmap: BTreeMap<&PairKey, &PdfRating> = pdf.iter().map(|x| (x.key(), x)).collect();
    let only_r: Vec<String> = rmap
        .keys()
        .filter(|k| !pmap.contains_key(*k))
        .map(|k| k.to_string())
        .collect();
    let only_p: Vec<String> = pmap
        .keys()
        .filter(|k| !rmap.contains_key(*k))
        .map(|k| k.to_string())
        .collect();
    let common: Vec<&PairKey> = rmap
        .keys()
        .filter(|k| pmap.contains_key(*k))
        .copied()
        .collect();
    out.section(
        "coverage",
        json!({
            "rerating_pairs": rr.len(),
            "pdf_pairs": pdf.len(),
            "common_pairs": common.len(),
            "only_rerating": only_r,
            "only_pdf": only_p,
        }),
    )?;
    if !only_r.is_empty() || !only_p.is_empty() {
        out.warn(format!(
            "{} pairs only in re-rating data, {} only in pdf-rating data; excluded",
            only_r.len(),
            only_p.len()
        ));
    }
    if common.is_empty() {
        out.warn("no pair present in both datasets");
        return Ok(out);
    }

    let rr_c: Vec<ReRatingSample> = common.iter().map(|k| rmap[k].clone()).collect();
    let pdf_c: Vec<PdfRating> = common.iter().map(|k| pmap[k].clone()).collect();
    let rf = fit_rerating(&rr_c, &s)?;
    let pf = fit_pdf(&pdf_c, &s)?;

    // Per-pair distribution tests.
    let mut pair_tests = Table::new(
        "pair_tests",
        &[
            "user_id",
            "item_id",
            "test",
            "statistic",
            "p_value",
            "rejected",
        ],
    );
    let mut tallies: BTreeMap<(String, TestKind), Tally> = BTreeMap::new();
    let mut overall: BTreeMap<TestKind, Tally> = BTreeMap::new();
    let mut skipped = 0usize;
    for (r, p) in rr_c.iter().zip(&pdf_c) {
        let (a, b) = (r.values(), tau_transform(p).values());
        for t in TestKind::ALL {
            let res = t.run(&a, &b, cfg.alpha).ok();
            if let Some(res) = res {
                pair_tests.push(vec![
                    r.key().user.clone(),
                    r.key().item.clone(),
                    t.name().into(),
                    cell(res.statistic),
                    cell(res.p_value),
                    cell(res.rejected),
                ]);
            } else {
                skipped += 1;
            }
            let verdict = res.map(|x| x.rejected);
            tallies
                .entry((r.key().item.clone(), t))
                .or_default()
                .add(verdict);
            overall.entry(t).or_default().add(verdict);
        }
    }
    if skipped > 0 {
        out.warn(format!("{skipped} pair tests skipped for too few values"));
    }
    let mut summary = Table::new(
        "test_summary",
        &[
            "item_id",
            "test",
            "rejected",
            "not_rejected",
            "skipped",
            "rejected_fraction",
        ],
    );
    for ((item, t), tally) in &tallies {
        summary.push(tally.row(vec![item.clone(), t.name().into()]));
    }
    out.section(
        "distribution_tests",
        overall
            .iter()
            .map(|(t, x)| (t.name(), x.json()))
            .collect::<BTreeMap<_, _>>(),
    )?;

    // Interval-length differences.
    let mut deltas = Table::new(
        "ci_deltas",
        &[
            "user_id",
            "item_id",
            "n_rerating",
            "n_pdf",
            "delta_mu",
            "delta_sigma",
            "informative",
        ],
    );
    let (mut dm, mut ds, mut count, mut pdf_tighter) = (0.0, 0.0, 0usize, 0usize);
    for (r, p) in rf.iter().zip(&pf) {
        let d_mu = ci_length_delta(&r.mu_est, &p.mu_est)?;
        let d_sigma = ci_length_delta(&r.sigma_est, &p.sigma_est)?;
        let informative = r.mu_est.informative && p.mu_est.informative;
        if informative {
            dm += d_mu;
            ds += d_sigma;
            count += 1;
            pdf_tighter += usize::from(d_mu > 0.0);
        }
        deltas.push(vec![
            r.key.user.clone(),
            r.key.item.clone(),
            cell(r.distribution.n),
            cell(p.distribution.n),
            cell(d_mu),
            cell(d_sigma),
            cell(informative),
        ]);
    }
    let c = count.max(1) as f64;
    out.section(
        "ci_deltas",
        json!({
            "informative_pairs": count,
            "mean_delta_mu": dm / c,
            "mean_delta_sigma": ds / c,
            "pdf_tighter_mu_fraction": pdf_tighter as f64 / c,
        }),
    )?;

    noise_stage(cfg, &rf, &pf, &mut out)?;
    precision_stage(cfg, &rf, &pf, &mut out)?;

    let mut hist = Table::new(
        "rating_histograms",
        &["method", "item_id", "category", "count"],
    );
    let mut counts: BTreeMap<(&str, String, usize), u64> = BTreeMap::new();
    for (r, p) in rr_c.iter().zip(&pdf_c) {
        for (j, &c) in r.histogram().iter().enumerate() {
            *counts
                .entry(("rerating", r.key().item.clone(), j + 1))
                .or_default() += u64::from(c);
        }
        for (j, &w) in p.weights().iter().enumerate() {
            *counts
                .entry(("pdf", p.key().item.clone(), j + 1))
                .or_default() += u64::from(w);
        }
    }
    for ((m, item, cat), n) in counts {
        hist.push(vec![m.into(), item, cell(cat), cell(n)]);
    }

    out.tables.extend([pair_tests, summary, deltas, hist]);
    Ok(out)
}

fn noise_stage(
    cfg: &RunConfig,
    rf: &[FittedRating],
    pf: &[FittedRating],
    out: &mut RunOutput,
) -> Result<()> {
    let mut values = Table::new(
        "noise_values",
        &["kind", "anchor", "method", "user_id", "item_id", "sigma"],
    );
    let mut models = Table::new(
        "noise_models",
        &[
            "kind",
            "anchor",
            "method",
            "family",
            "param_1",
            "param_2",
            "ks_distance",
            "selected",
        ],
    );
    let mut tests = Table::new(
        "noise_tests",
        &["kind", "anchor", "test", "statistic", "p_value", "rejected"],
    );
    let mut section = BTreeMap::new();
    let mut fit_failures = 0usize;
    for kind in [NoiseKind::ItemSpecific, NoiseKind::UserSpecific] {
        let rn = build_all_noise(rf, kind);
        let pn = build_all_noise(pf, kind);
        let mut tallies: BTreeMap<TestKind, Tally> = BTreeMap::new();
        let mut selected: BTreeMap<String, usize> = BTreeMap::new();
        for (r, p) in rn.iter().zip(&pn) {
            for (method, nd) in [("rerating", r), ("pdf", p)] {
                record_noise(
                    kind,
                    method,
                    nd,
                    &mut values,
                    &mut models,
                    &mut selected,
                    &mut fit_failures,
                );
            }
            match compare_noise(r, p, cfg.alpha) {
                Ok(cmp) => {
                    for (t, res) in [
                        (TestKind::Ks, cmp.ks),
                        (TestKind::Welch, cmp.welch),
                        (TestKind::Levene, cmp.levene),
                    ] {
                        tests.push(vec![
                            kind.short_name().into(),
                            r.anchor.clone(),
                            t.name().into(),
                            cell(res.statistic),
                            cell(res.p_value),
                            cell(res.rejected),
                        ]);
                        tallies.entry(t).or_default().add(Some(res.rejected));
                    }
                }
                Err(_) => TestKind::ALL
                    .iter()
                    .for_each(|&t| tallies.entry(t).or_default().add(None)),
            }
        }
        section.insert(
            kind.short_name(),
            json!({
                "anchors": rn.len(),
                "selected_models": selected,
                "tests": tallies.iter().map(|(t, x)| (t.name(), x.json())).collect::<BTreeMap<_, _>>(),
            }),
        );
    }
    if fit_failures > 0 {
        out.warn(format!(
            "{fit_failures} noise model fits skipped (too few or identical values)"
        ));
    }
    out.section("noise", section)?;
    out.tables.extend([values, models, tests]);
    Ok(())
}

fn record_noise(
    kind: NoiseKind,
    method: &str,
    nd: &NoiseDistribution,
    values: &mut Table,
    models: &mut Table,
    selected: &mut BTreeMap<String, usize>,
    failures: &mut usize,
) {
    for o in &nd.sigmas {
        values.push(vec![
            kind.short_name().into(),
            nd.anchor.clone(),
            method.into(),
            o.key.user.clone(),
            o.key.item.clone(),
            cell(o.sigma),
        ]);
    }
    let fits: Vec<_> = [NoiseFamily::Gaussian, NoiseFamily::PowerLaw]
        .into_iter()
        .filter_map(|f| match fit_noise_model(nd, f) {
            Ok(fit) => Some(fit),
            Err(_) => {
                *failures += 1;
                None
            }
        })
        .collect();
    let best = fits
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.ks_distance.total_cmp(&b.1.ks_distance))
        .map(|(i, _)| i);
    for (i, fit) in fits.iter().enumerate() {
        let (family, a, b) = model_params(&fit.model);
        let is_best = Some(i) == best;
        if is_best {
            *selected.entry(format!("{method}:{family}")).or_default() += 1;
        }
        models.push(vec![
            kind.short_name().into(),
            nd.anchor.clone(),
            method.into(),
            family.into(),
            cell(a),
            cell(b),
            cell(fit.ks_distance),
            cell(is_best),
        ]);
    }
}

fn precision_stage(
    cfg: &RunConfig,
    rf: &[FittedRating],
    pf: &[FittedRating],
    out: &mut RunOutput,
) -> Result<()> {
    let grid = q_grid();
    let stream = master(cfg).derive(tags::RESAMPLE);
    let mut by_item: BTreeMap<&str, (Vec<&FittedRating>, Vec<&FittedRating>)> = BTreeMap::new();
    for (r, p) in rf.iter().zip(pf) {
        let e = by_item.entry(r.key.item.as_str()).or_default();
        e.0.push(r);
        e.1.push(p);
    }
    let mut table = Table::new(
        "percentile_precision",
        &["item_id", "q", "sigma_r_q", "sigma_p_q", "delta_q"],
    );
    let mut section = BTreeMap::new();
    for (idx, (item, (r, p))) in by_item.iter().enumerate() {
        let rs = resample_noise(r, cfg.resamples, &mut stream.derive2(idx as u64, 0).rng());
        let ps = resample_noise(p, cfg.resamples, &mut stream.derive2(idx as u64, 1).rng());
        let curve = percentile_precision(&rs, &ps, &grid)?;
        let mean_delta = curve.iter().map(|c| c.delta_q).sum::<f64>() / curve.len() as f64;
        section.insert(item.to_string(), json!({ "mean_delta_q": mean_delta }));
        for c in curve {
            table.push(vec![
                item.to_string(),
                cell(c.q),
                cell(c.sigma_r_q),
                cell(c.sigma_p_q),
                cell(c.delta_q),
            ]);
        }
    }
    out.section("percentile_precision", section)?;
    out.tables.push(table);
    Ok(())
}

/// Fitted re-rating cohort shared by the Q2 stages.
pub struct Q2Data {
    pub samples: Vec<ReRatingSample>,
    pub fits: BTreeMap<PairKey, FittedRating>,
    pub distributions: BTreeMap<PairKey, RatingDistribution>,
}

pub fn prepare_q2(cfg: &RunConfig, out: &mut RunOutput) -> Result<Q2Data> {
    let samples = load_rerating(cfg, out)?;
    if samples.is_empty() {
        return Err(CoreError::EmptySample.into());
    }
    let fits: BTreeMap<PairKey, FittedRating> = fit_rerating(&samples, &cfg.estimation())?
        .into_iter()
        .map(|f| (f.key.clone(), f))
        .collect();
    let distributions = fits
        .iter()
        .map(|(k, f)| (k.clone(), f.distribution))
        .collect();
    Ok(Q2Data {
        samples,
        fits,
        distributions,
    })
}

/// Predictor family `k = 1..=6`; a `k` some pair lacks the trial for is skipped.
pub fn family(data: &Q2Data, out: &mut RunOutput) -> Result<Vec<Predictor>> {
    let mut preds = Vec::new();
    for k in 1..=PREDICTOR_FAMILY_SIZE {
        match predictor_family(&data.samples, k) {
            Ok(p) => preds.push(p),
            Err(e @ CoreError::MissingTrial { .. }) => {
                out.warn(format!("predictor k{k} skipped: {e}"))
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(preds)
}

const SUMMARY_HEADER: [&str; 13] = [
    "predictor",
    "count",
    "mean",
    "std",
    "min",
    "max",
    "q0.025",
    "q0.05",
    "q0.25",
    "q0.5",
    "q0.75",
    "q0.95",
    "q0.975",
];

fn summary_row(prefix: &[String], d: &MetricDistribution) -> Vec<String> {
    let s = &d.summary;
    let mut r = prefix.to_vec();
    r.extend([
        d.label.clone(),
        cell(s.count),
        cell(s.mean),
        cell(s.std),
        cell(s.min),
        cell(s.max),
    ]);
    r.extend(s.quantiles.iter().map(|&(_, v)| cell(v)));
    r
}

pub fn rmse_stage(
    cfg: &RunConfig,
    data: &Q2Data,
    preds: &[Predictor],
    out: &mut RunOutput,
) -> Result<Vec<MetricDistribution>> {
    let stream = master(cfg).derive(tags::RMSE);
    let dists = preds
        .iter()
        .enumerate()
        .map(|(j, p)| {
            rmse_mc(
                p,
                &data.distributions,
                cfg.mc_trials,
                stream.derive(j as u64),
            )
        })
        .collect::<humanrate_core::Result<Vec<_>>>()?;
    let mut summary = Table::new("rmse_summary", &SUMMARY_HEADER);
    let mut hist = Table::new(
        "rmse_histograms",
        &["predictor", "bin_lower", "bin_upper", "count"],
    );
    let mut pairs = Table::new("rmse_pairs", &["better", "worse", "overlap", "p_error"]);
    for d in &dists {
        summary.push(summary_row(&[], d));
        histogram_rows(&mut hist, &[], d);
    }
    for (i, a) in dists.iter().enumerate() {
        for b in &dists[i + 1..] {
            let (better, worse) = if a.summary.mean <= b.summary.mean {
                (a, b)
            } else {
                (b, a)
            };
            let p = error_probability_empirical(better, worse)?;
            pairs.push(vec![
                better.label.clone(),
                worse.label.clone(),
                cell(overlap(a, b)?),
                cell(p.p_error),
            ]);
        }
    }
    let best = dists
        .iter()
        .min_by(|a, b| a.summary.mean.total_cmp(&b.summary.mean))
        .map(|d| d.label.clone());
    out.section(
        "rmse",
        json!({
            "mc_trials": cfg.mc_trials,
            "pairs": data.distributions.len(),
            "predictors": dists.iter().map(|d| (d.label.clone(), &d.summary)).collect::<BTreeMap<_, _>>(),
            "lowest_mean": best,
        }),
    )?;
    out.tables.extend([summary, hist, pairs]);
    Ok(dists)
}

pub fn borderline_stage(
    cfg: &RunConfig,
    data: &Q2Data,
    preds: &[Predictor],
    out: &mut RunOutput,
) -> Result<()> {
    if preds.len() < 2 {
        out.warn("borderline cases skipped: fewer than two predictors");
        return Ok(());
    }
    let b = borderline_cases(
        preds,
        &data.fits,
        cfg.candidates,
        cfg.mc_trials,
        master(cfg).derive(tags::BORDERLINE),
    )?;
    let mut summary = Table::new(
        "borderline_summary",
        &[&["case"][..], &SUMMARY_HEADER[..]].concat(),
    );
    let mut hist = Table::new(
        "borderline_histograms",
        &["case", "predictor", "bin_lower", "bin_upper", "count"],
    );
    for (case, dists) in [("best", &b.best), ("worst", &b.worst)] {
        for d in dists {
            summary.push(summary_row(&[case.to_string()], d));
            histogram_rows(&mut hist, &[case.to_string()], d);
        }
    }
    out.section(
        "borderline",
        json!({
            "candidates": cfg.candidates,
            "best_candidate": b.best_candidate,
            "worst_candidate": b.worst_candidate,
            "best_overlap": b.best_overlap,
            "worst_overlap": b.worst_overlap,
        }),
    )?;
    out.tables.extend([summary, hist]);
    Ok(())
}

pub fn convergence_stage(
    cfg: &RunConfig,
    data: &Q2Data,
    preds: &[Predictor],
    out: &mut RunOutput,
) -> Result<()> {
    let Some(k1) = preds.first() else {
        out.warn("convergence skipped: no predictor");
        return Ok(());
    };
    let r = convergence_analysis(
        &data.fits,
        k1,
        &cfg.convergence(),
        master(cfg).derive(tags::CONVERGENCE),
    )?;
    let mut t = Table::new(
        "convergence",
        &["n", "overlap", "min_rmse_mean", "max_rmse_mean"],
    );
    for row in &r.rows {
        t.push(vec![
            cell(row.n),
            cell(row.overlap),
            cell(row.min_rmse_mean),
            cell(row.max_rmse_mean),
        ]);
    }
    if r.crossing.is_none() {
        out.warn(format!(
            "convergence: overlap never exceeded {} on the grid",
            r.threshold
        ));
    }
    out.section(
        "convergence",
        json!({
            "predictor": k1.label,
            "threshold": r.threshold,
            "crossing_n": r.crossing,
            "status": if r.converged() { "converged" } else { "not converged" },
        }),
    )?;
    out.tables.push(t);
    Ok(())
}

pub fn distinguish_stage(cfg: &RunConfig, data: &Q2Data, out: &mut RunOutput) -> Result<()> {
    let optimal = optimal_predictor(&data.samples)?;
    let r = min_detectable_noise(
        &data.distributions,
        &optimal,
        &cfg.noise_search(),
        master(cfg).derive(tags::NOISE_SEARCH),
    )?;
    let mut t = Table::new("noise_curve", &["p", "p_error", "p_error_std"]);
    for pt in &r.points {
        t.push(vec![cell(pt.p), cell(pt.p_error), cell(pt.p_error_std)]);
    }
    out.section(
        "distinguishability",
        json!({
            "epsilon": r.epsilon,
            "crossing_p": r.crossing,
            "status": if r.crossing.is_some() { "reached" } else { "not reached" },
        }),
    )?;
    out.tables.push(t);
    Ok(())
}

/// Indirect tests of the trial-mean predictor's RMSE against every other member.
pub fn indirect_stage(
    cfg: &RunConfig,
    data: &Q2Data,
    preds: &[Predictor],
    out: &mut RunOutput,
) -> Result<()> {
    if preds.len() < 2 {
        out.warn("indirect tests skipped: fewer than two predictors");
        return Ok(());
    }
    let base = RmseModel::new(&preds[0], &data.distributions)?;
    let stream = master(cfg).derive(tags::INDIRECT);
    let mut t = Table::new(
        "indirect_tests",
        &[
            "a",
            "b",
            "test",
            "sample_size",
            "repetitions",
            "h",
            "effect_proven",
        ],
    );
    let mut section = BTreeMap::new();
    for (j, p) in preds.iter().enumerate().skip(1) {
        let other = RmseModel::new(p, &data.distributions)?;
        let res = indirect_mc_battery(
            &base,
            &other,
            cfg.indirect_sample_size,
            cfg.indirect_repetitions,
            &TestKind::ALL,
            cfg.alpha,
            stream.derive(j as u64),
        )?;
        for (kind, o) in &res {
            t.push(vec![
                preds[0].label.clone(),
                p.label.clone(),
                kind.name().into(),
                cell(o.sample_size),
                cell(o.repetitions),
                cell(o.h),
                cell(o.effect_proven),
            ]);
        }
        section.insert(
            p.label.clone(),
            res.iter()
                .map(|(k, o)| (k.name(), o.h))
                .collect::<BTreeMap<_, _>>(),
        );
    }
    out.section("indirect_tests", section)?;
    out.tables.push(t);
    Ok(())
}

pub fn run_q2(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::new("q2");
    let data = prepare_q2(cfg, &mut out)?;
    let preds = family(&data, &mut out)?;
    rmse_stage(cfg, &data, &preds, &mut out)?;
    borderline_stage(cfg, &data, &preds, &mut out)?;
    convergence_stage(cfg, &data, &preds, &mut out)?;
    distinguish_stage(cfg, &data, &mut out)?;
    indirect_stage(cfg, &data, &preds, &mut out)?;
    Ok(out)
}

pub fn run_rmse(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::new("rmse");
    let data = prepare_q2(cfg, &mut out)?;
    let preds = family(&data, &mut out)?;
    rmse_stage(cfg, &data, &preds, &mut out)?;
    Ok(out)
}

pub fn run_distinguish(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::new("distinguish");
    let data = prepare_q2(cfg, &mut out)?;
    distinguish_stage(cfg, &data, &mut out)?;
    Ok(out)
}

pub fn run_converge(cfg: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::new("converge");
    let data = prepare_q2(cfg, &mut out)?;
    let preds = family(&data, &mut out)?;
    convergence_stage(cfg, &data, &preds, &mut out)?;
    Ok(out)
}
