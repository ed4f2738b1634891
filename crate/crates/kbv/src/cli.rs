//! Experiment configuration and the report-writing runner behind the `kbv`
//! binary.
//!
//! Every run resolves to an [`ExperimentConfig`] (which round-trips through
//! JSON byte-identically), executes one command, and writes one report file
//! embedding the config, the artifact version, and the arithmetic mode.
//! Exact-mode reports are byte-identical across runs. Exit status contract:
//! 0 for success (including vacuous bounds), 1 for usage or module errors,
//! 2 when a hard invariant is violated.

use crate::apps::{
    erdos_kac_experiment, poisson_marginal_tv, poisson_process_bound, IndicatorProcessSpec,
};
use crate::bounds::{
    exact_le_bound, small_regime_bound_eval, high_multiplicity_bound, many_divisors_bound, rough_bound,
    main_decay_bound, truncation_remainder_bound, BoundParams,
};
use crate::exact::{
    bonferroni_partial_sums, event_prob_a, event_prob_a_tilde, exact_tv, float_tv,
    partitioned_tv, MultiplicityVector,
};
use crate::interval::{parse_rational, ratio_to_f64};
use crate::laws::LawDescriptor;
use crate::primes::GammaSet;
use crate::report::{mass_csv, mass_json, CSV_HEADER};
use crate::{Error, Limits, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct LawConfig {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Default)]
pub struct GammaConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primes: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct ParamConfig {
    pub t: String,
    pub kappa: String,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub c_const: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_m: Option<f64>,
}

impl Default for ParamConfig {
    fn default() -> Self {
        ParamConfig {
            t: "1".into(),
            kappa: "1".into(),
            epsilon: 1.0,
            delta: None,
            c_const: 1.0,
            alpha: None,
            beta_m: None,
        }
    }
}

/// One reproducible experiment. Serializes byte-identically through JSON.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: String,
    pub law: LawConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<u64>>,
    pub gamma: GammaConfig,
    pub params: ParamConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_primes: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_mults: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_trunc: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncate_window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_grid: Option<Vec<f64>>,
    pub mode: String,
    pub output: String,
    /// Placeholder for the float mode's compensated summation order.
    pub seed: u64,
    pub max_gamma: usize,
    pub max_n: u64,
}

impl ExperimentConfig {
    fn base(command: &str) -> Self {
        let defaults = Limits::default();
        ExperimentConfig {
            command: command.into(),
            law: LawConfig {
                kind: "uniform".into(),
                s: None,
                upsilon: None,
                csv: None,
            },
            n: None,
            n_grid: None,
            gamma: GammaConfig::default(),
            params: ParamConfig::default(),
            a_n: None,
            time: None,
            d_primes: None,
            m_mults: None,
            gamma_trunc: None,
            truncate_window: None,
            delta_grid: None,
            epsilon_grid: None,
            mode: "exact".into(),
            output: "json".into(),
            seed: 0,
            max_gamma: defaults.max_gamma,
            max_n: defaults.max_n,
        }
    }

    fn limits(&self) -> Limits {
        Limits {
            max_gamma: self.max_gamma,
            max_n: self.max_n,
            ..Limits::default()
        }
    }

    fn law_descriptor(&self) -> Result<LawDescriptor> {
        match self.law.kind.as_str() {
            "uniform" => Ok(LawDescriptor::Uniform),
            "pareto" => {
                let s = self
                    .law
                    .s
                    .as_deref()
                    .ok_or_else(|| Error::Usage("pareto law requires --s".into()))?;
                let s = parse_rational(s)
                    .ok_or_else(|| Error::Usage(format!("malformed exponent --s {s}")))?;
                Ok(LawDescriptor::Pareto { s })
            }
            "density" => {
                let upsilon = self
                    .law
                    .upsilon
                    .clone()
                    .ok_or_else(|| Error::Usage("density law requires --upsilon".into()))?;
                Ok(LawDescriptor::Density { upsilon })
            }
            "custom" => {
                let path = self
                    .law
                    .csv
                    .clone()
                    .ok_or_else(|| Error::Usage("custom law requires --csv".into()))?;
                Ok(LawDescriptor::Custom { path: path.into() })
            }
            other => Err(Error::Usage(format!("unknown law kind '{other}'"))),
        }
    }

    /// The prime window, resolving descriptors in priority order: explicit
    /// list, then `[lo, hi]` window, then `n^(1/beta)`, then first-k.
    fn resolve_gamma(&self, n: u64) -> Result<GammaSet> {
        if let Some(primes) = &self.gamma.primes {
            let mut ps = primes.clone();
            ps.sort_unstable();
            ps.dedup();
            return GammaSet::from_primes(n, ps);
        }
        if let Some([lo, hi]) = self.gamma.window {
            return GammaSet::window(n, lo, hi);
        }
        if let Some(beta) = self.gamma.beta {
            if beta.is_nan() || beta <= 0.0 {
                return Err(Error::Usage(format!("--beta must be positive, got {beta}")));
            }
            return GammaSet::from_beta(n, beta);
        }
        if let Some(size) = self.gamma.size {
            return GammaSet::first_k(n, size);
        }
        Err(Error::Usage(
            "no prime window given (use --gamma-primes, --gamma-window, --beta, or --gamma-size)"
                .into(),
        ))
    }

    fn need_n(&self) -> Result<u64> {
        self.n
            .ok_or_else(|| Error::Usage("this command requires --n".into()))
    }

    fn t_rational(&self) -> Result<BigRational> {
        parse_rational(&self.params.t)
            .ok_or_else(|| Error::Usage(format!("malformed --t {}", self.params.t)))
    }

    fn kappa_rational(&self) -> Result<BigRational> {
        parse_rational(&self.params.kappa)
            .ok_or_else(|| Error::Usage(format!("malformed --kappa {}", self.params.kappa)))
    }

    fn delta_or_default(&self) -> f64 {
        // Default delta sits at t/4, inside the admissible (0, t/3).
        self.params
            .delta
            .unwrap_or_else(|| ratio_to_f64(&self.t_rational().unwrap_or_else(|_| BigRational::one())) / 4.0)
    }
}

/// Result of a run: where the report went and which hard invariants (if
/// any) failed.
pub struct RunOutcome {
    pub report_path: PathBuf,
    pub violations: Vec<String>,
    pub summary: String,
}

struct ReportBody {
    json: Value,
    csv_header: Vec<&'static str>,
    csv_rows: Vec<Vec<String>>,
    summary: String,
    violations: Vec<String>,
}

/// Executes a config and writes its report into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    match config.mode.as_str() {
        "exact" | "float" => {}
        other => return Err(Error::Usage(format!("unknown mode '{other}'"))),
    }
    let body = match config.command.as_str() {
        "tv-exact" => run_tv_exact(config)?,
        "certify-ht" => run_certify(config)?,
        "bound" => run_bound(config)?,
        "partition" => run_partition(config)?,
        "bonferroni" => run_bonferroni(config)?,
        "erdos-kac" => run_erdos_kac(config)?,
        "poisson" => run_poisson(config)?,
        "sweep" => run_sweep(config)?,
        other => return Err(Error::Usage(format!("unknown command '{other}'"))),
    };

    std::fs::create_dir_all(out_dir)?;
    let report_path = match config.output.as_str() {
        "json" => {
            let path = out_dir.join(format!("{}.json", config.command));
            let envelope = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "mode": config.mode,
                "config": config,
                "report": body.json,
            });
            let mut text = serde_json::to_string_pretty(&envelope)?;
            text.push('\n');
            std::fs::write(&path, text)?;
            path
        }
        "csv" => {
            let path = out_dir.join(format!("{}.csv", config.command));
            let mut text = String::new();
            text.push_str(CSV_HEADER);
            text.push('\n');
            text.push_str(&format!("# version: {}\n", env!("CARGO_PKG_VERSION")));
            text.push_str(&format!("# mode: {}\n", config.mode));
            text.push_str(&format!("# config: {}\n", serde_json::to_string(config)?));
            text.push_str(&body.csv_header.join(","));
            text.push('\n');
            for row in &body.csv_rows {
                text.push_str(&row.join(","));
                text.push('\n');
            }
            std::fs::write(&path, text)?;
            path
        }
        other => return Err(Error::Usage(format!("unknown output format '{other}'"))),
    };

    Ok(RunOutcome {
        report_path,
        violations: body.violations,
        summary: body.summary,
    })
}

fn require_exact(config: &ExperimentConfig) -> Result<()> {
    if config.mode != "exact" {
        return Err(Error::Usage(format!(
            "command '{}' supports only --mode exact",
            config.command
        )));
    }
    Ok(())
}

fn run_tv_exact(config: &ExperimentConfig) -> Result<ReportBody> {
    let n = config.need_n()?;
    let desc = config.law_descriptor()?;
    let gamma = config.resolve_gamma(n)?;
    let mut violations = Vec::new();

    let (tv_json, tv_cell, tv_dec) = if config.mode == "float" {
        let tv = float_tv(&desc, n, &gamma)?;
        (json!({ "decimal": tv }), format!("{tv}"), tv)
    } else {
        let law = desc.build(n)?;
        let tv = exact_tv(&law, &gamma, &config.limits())?;
        if tv.lo() > &BigRational::one() || tv.hi().is_negative() {
            violations.push(format!(
                "total variation outside [0, 1]: {}",
                mass_csv(&tv)
            ));
        }
        (mass_json(&tv), mass_csv(&tv), tv.to_f64())
    };

    let summary = format!(
        "tv-exact: law {} on [{}], window of {} primes -> TV = {}",
        desc.label(),
        n,
        gamma.len(),
        tv_cell
    );
    Ok(ReportBody {
        json: json!({
            "n": n,
            "law": desc.label(),
            "gamma": gamma.to_json(),
            "tv": tv_json,
        }),
        csv_header: vec!["n", "law", "gamma_size", "tv", "tv_decimal"],
        csv_rows: vec![vec![
            n.to_string(),
            desc.label(),
            gamma.len().to_string(),
            tv_cell,
            tv_dec.to_string(),
        ]],
        summary,
        violations,
    })
}

fn run_certify(config: &ExperimentConfig) -> Result<ReportBody> {
    require_exact(config)?;
    let n = config.need_n()?;
    let law = config.law_descriptor()?.build(n)?;
    let cert = law.certify_ht(&config.t_rational()?, &config.kappa_rational()?)?;
    let summary = format!(
        "certify-ht: {} at n={} with (t={}, kappa={}) -> {} (kappa required >= {:.6})",
        cert.law,
        n,
        cert.t,
        cert.kappa,
        cert.holds.as_str(),
        cert.kappa_required.lo_f64()
    );
    Ok(ReportBody {
        json: cert.to_json(),
        csv_header: vec![
            "n",
            "law",
            "t",
            "kappa",
            "max_dev",
            "max_ratio",
            "kappa_required",
            "holds",
            "renormalized",
        ],
        csv_rows: vec![vec![
            cert.n.to_string(),
            cert.law.clone(),
            cert.t.to_string(),
            cert.kappa.to_string(),
            mass_csv(&cert.max_dev),
            mass_csv(&cert.max_ratio),
            mass_csv(&cert.kappa_required),
            cert.holds.as_str().to_string(),
            cert.renormalized.to_string(),
        ]],
        summary,
        violations: Vec::new(),
    })
}

fn run_bound(config: &ExperimentConfig) -> Result<ReportBody> {
    let n = config.need_n()?;
    let gamma = config.resolve_gamma(n)?;
    let t = ratio_to_f64(&config.t_rational()?);
    let kappa = ratio_to_f64(&config.kappa_rational()?);
    let params = BoundParams::for_gamma(&gamma, t, kappa, config.params.epsilon, config.delta_or_default())?;
    let main = main_decay_bound(&params);
    // Regime bounds with inadmissible parameters (rho <= 1, delta outside
    // (0, t/3)) are reported as null rather than failing the whole report.
    let many = many_divisors_bound(params.delta, params.epsilon, params.kappa, params.rho).ok();
    let high = high_multiplicity_bound(params.delta, params.epsilon, params.kappa, params.rho).ok();
    let bonf = small_regime_bound_eval(&params).ok();
    let trunc_order = config.gamma_trunc.or_else(|| params.gamma_trunc());
    let trunc = trunc_order.and_then(|g| truncation_remainder_bound(g, &params).ok());
    let rough = rough_bound(n as f64, gamma.len(), config.params.c_const);

    let summary = format!(
        "bound: n={}, |window|={} (rho={:.4}) -> main bound {:.6} ({}, c={:.6}){}",
        n,
        gamma.len(),
        params.rho,
        main.bound,
        main.branch.as_str(),
        main.c,
        if main.vacuous { ", vacuous (> 1)" } else { "" }
    );
    Ok(ReportBody {
        json: json!({
            "n": n,
            "gamma": gamma.to_json(),
            "params": {
                "t": t, "kappa": kappa, "epsilon": params.epsilon, "delta": params.delta,
                "alpha": params.alpha(), "beta": params.beta(),
            },
            "cardinality_ok": main.cardinality_ok,
            "main_bound": { "value": main.bound, "c": main.c, "branch": main.branch.as_str(), "vacuous": main.vacuous },
            "many_divisors": many,
            "high_multiplicity": high.as_ref().map(|h| json!({ "value": h.bound, "alpha": h.alpha, "beta": h.beta })),
            "small_regime": bonf.as_ref().map(|b| json!({ "value": b.bound, "c": b.c, "branch": b.branch.as_str(), "gamma_trunc": b.gamma_trunc })),
            "truncation_remainder": trunc.as_ref().map(|tr| json!({
                "gamma_trunc": trunc_order,
                "as_displayed": tr.as_displayed,
                "as_derived": tr.as_derived,
                "first_term": tr.first_term,
                "tight_case": tr.tight_case,
            })),
            "rough_bound": { "c_const": config.params.c_const, "value": rough },
        }),
        csv_header: vec![
            "n",
            "gamma_size",
            "rho",
            "main_bound",
            "branch",
            "c",
            "vacuous",
            "cardinality_ok",
            "many_divisors",
            "high_multiplicity",
            "small_regime",
            "rough",
        ],
        csv_rows: vec![vec![
            n.to_string(),
            gamma.len().to_string(),
            params.rho.to_string(),
            main.bound.to_string(),
            main.branch.as_str().to_string(),
            main.c.to_string(),
            main.vacuous.to_string(),
            main.cardinality_ok.to_string(),
            many.map(|v| v.to_string()).unwrap_or_default(),
            high.map(|h| h.bound.to_string()).unwrap_or_default(),
            bonf.map(|b| b.bound.to_string()).unwrap_or_default(),
            rough.to_string(),
        ]],
        summary,
        violations: Vec::new(),
    })
}

fn run_partition(config: &ExperimentConfig) -> Result<ReportBody> {
    require_exact(config)?;
    let n = config.need_n()?;
    let law = config.law_descriptor()?.build(n)?;
    let gamma = config.resolve_gamma(n)?;
    let t = ratio_to_f64(&config.t_rational()?);
    let kappa = ratio_to_f64(&config.kappa_rational()?);
    let delta = config.delta_or_default();

    // Thresholds from the bound parameters unless overridden.
    let bound_params =
        BoundParams::for_gamma(&gamma, t, kappa, config.params.epsilon, delta).ok();
    let alpha = config
        .params
        .alpha
        .or_else(|| bound_params.as_ref().map(|p| p.alpha()))
        .ok_or_else(|| Error::Usage("window too small for rho; pass --alpha explicitly".into()))?;
    let beta = config
        .params
        .beta_m
        .or_else(|| bound_params.as_ref().map(|p| p.beta()))
        .ok_or_else(|| Error::Usage("window too small for rho; pass --beta-m explicitly".into()))?;

    let part = partitioned_tv(&law, &gamma, alpha, beta, &config.limits())?;
    let mut violations = Vec::new();

    // Exact additivity ties the partition to the oracle.
    let twice_tv = part.tv.mul_q(&BigRational::from_integer(2.into()));
    if part.total() != twice_tv {
        violations.push("partition sums do not add to twice the exact TV".into());
    }

    let mut checks = Vec::new();
    if let Some(bp) = &bound_params {
        let many_bound = many_divisors_bound(bp.delta, bp.epsilon, bp.kappa, bp.rho)?;
        let high_bound = high_multiplicity_bound(bp.delta, bp.epsilon, bp.kappa, bp.rho)?.bound;
        // These two estimates hold for every n: violations are hard.
        let many_ok = exact_le_bound(&part.s_many, many_bound);
        if !many_ok {
            violations.push(format!(
                "many-divisors sum {} exceeds its bound {}",
                mass_csv(&part.s_many),
                many_bound
            ));
        }
        let high_ok = exact_le_bound(&part.s_high, high_bound);
        if !high_ok {
            violations.push(format!(
                "high-multiplicity sum {} exceeds its bound {}",
                mass_csv(&part.s_high),
                high_bound
            ));
        }
        checks.push(("many_divisors", many_bound, verdict_str(many_ok)));
        checks.push(("high_multiplicity", high_bound, verdict_str(high_ok)));
        // The small-regime estimate holds only for n large; soft verdict.
        if let Ok(bonf) = small_regime_bound_eval(bp) {
            let small_ok = exact_le_bound(&part.s_small, bonf.bound);
            checks.push((
                "small_regime",
                bonf.bound,
                if small_ok { "pass" } else { "exceeded (asymptotic bound, recorded)" },
            ));
        }
    }

    let summary = format!(
        "partition: alpha={alpha:.4}, beta={beta:.4} -> S_many={}, S_high={}, S_small={}, 2*TV={}",
        mass_csv(&part.s_many),
        mass_csv(&part.s_high),
        mass_csv(&part.s_small),
        mass_csv(&twice_tv),
    );
    Ok(ReportBody {
        json: json!({
            "n": n,
            "law": law.label(),
            "gamma": gamma.to_json(),
            "alpha": alpha,
            "beta": beta,
            "s_many": mass_json(&part.s_many),
            "s_high": mass_json(&part.s_high),
            "s_small": mass_json(&part.s_small),
            "tv": mass_json(&part.tv),
            "bound_checks": checks.iter().map(|(name, value, verdict)| json!({
                "name": name, "value": value, "verdict": verdict,
            })).collect::<Vec<_>>(),
        }),
        csv_header: vec![
            "n",
            "law",
            "gamma_size",
            "alpha",
            "beta",
            "s_many",
            "s_high",
            "s_small",
            "tv",
            "tv_decimal",
        ],
        csv_rows: vec![vec![
            n.to_string(),
            law.label(),
            gamma.len().to_string(),
            alpha.to_string(),
            beta.to_string(),
            mass_csv(&part.s_many),
            mass_csv(&part.s_high),
            mass_csv(&part.s_small),
            mass_csv(&part.tv),
            part.tv.to_f64().to_string(),
        ]],
        summary,
        violations,
    })
}

fn verdict_str(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn run_bonferroni(config: &ExperimentConfig) -> Result<ReportBody> {
    require_exact(config)?;
    let n = config.need_n()?;
    let law = config.law_descriptor()?.build(n)?;
    let gamma = config.resolve_gamma(n)?;
    let d = config.d_primes.clone().unwrap_or_default();
    let mults = config.m_mults.clone().unwrap_or_default();
    if d.len() != mults.len() {
        return Err(Error::Usage(format!(
            "--d lists {} primes but --m lists {} multiplicities",
            d.len(),
            mults.len()
        )));
    }
    let pairs: Vec<(u64, u32)> = d.iter().copied().zip(mults.iter().copied()).collect();
    let m = MultiplicityVector::from_pairs(&gamma, &pairs)?;
    let trunc = config
        .gamma_trunc
        .ok_or_else(|| Error::Usage("bonferroni requires --gamma-trunc".into()))?;

    let sandwich = bonferroni_partial_sums(&law, &gamma, &d, &m, trunc)?;
    let event = event_prob_a(&law, &gamma, &d, &m, &config.limits())?;
    let event_geo = event_prob_a_tilde(&gamma, &d, &m)?;

    let mut violations = Vec::new();
    if !(sandwich.lower.certainly_le(&event) && event.certainly_le(&sandwich.upper)) {
        violations.push("sandwich violated for the sampled law".into());
    }
    if !(sandwich.geo_lower <= event_geo && event_geo <= sandwich.geo_upper) {
        violations.push("sandwich violated for the geometric law".into());
    }

    let summary = format!(
        "bonferroni: order {} -> {} <= {} <= {} ({})",
        trunc,
        mass_csv(&sandwich.lower),
        mass_csv(&event),
        mass_csv(&sandwich.upper),
        if violations.is_empty() { "ok" } else { "VIOLATED" }
    );
    Ok(ReportBody {
        json: json!({
            "n": n,
            "law": law.label(),
            "gamma": gamma.to_json(),
            "d": d,
            "m": mults,
            "gamma_trunc": trunc,
            "lower": mass_json(&sandwich.lower),
            "event": mass_json(&event),
            "upper": mass_json(&sandwich.upper),
            "geo_lower": crate::report::rational_str(&sandwich.geo_lower),
            "geo_event": crate::report::rational_str(&event_geo),
            "geo_upper": crate::report::rational_str(&sandwich.geo_upper),
            "ok": violations.is_empty(),
        }),
        csv_header: vec![
            "n",
            "gamma_trunc",
            "lower",
            "event",
            "upper",
            "geo_lower",
            "geo_event",
            "geo_upper",
            "ok",
        ],
        csv_rows: vec![vec![
            n.to_string(),
            trunc.to_string(),
            mass_csv(&sandwich.lower),
            mass_csv(&event),
            mass_csv(&sandwich.upper),
            crate::report::rational_str(&sandwich.geo_lower),
            crate::report::rational_str(&event_geo),
            crate::report::rational_str(&sandwich.geo_upper),
            violations.is_empty().to_string(),
        ]],
        summary,
        violations,
    })
}

fn run_erdos_kac(config: &ExperimentConfig) -> Result<ReportBody> {
    require_exact(config)?;
    let grid = config
        .n_grid
        .clone()
        .ok_or_else(|| Error::Usage("erdos-kac requires --n-grid".into()))?;
    let family = config.law_descriptor()?;
    let table = erdos_kac_experiment(
        &family,
        &grid,
        &config.t_rational()?,
        &config.kappa_rational()?,
        &config.limits(),
    )?;

    let rows_json: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            json!({
                "n": r.n,
                "w1": r.w1,
                "ref_rate": r.ref_rate,
                "ratio": if r.ratio.is_nan() { Value::Null } else { json!(r.ratio) },
                "pre_asymptotic": r.pre_asymptotic,
                "omega_mean": r.omega_mean,
                "omega_variance": r.omega_variance,
            })
        })
        .collect();
    let csv_rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.w1.to_string(),
                r.ref_rate.to_string(),
                r.ratio.to_string(),
                r.pre_asymptotic.to_string(),
                r.omega_mean.to_string(),
                r.omega_variance.to_string(),
            ]
        })
        .collect();

    let trend: Vec<String> = table.rows.iter().map(|r| format!("{:.5}", r.w1)).collect();
    let summary = format!(
        "erdos-kac: law {}, {} grid points -> W1 trend [{}]",
        table.law,
        table.rows.len(),
        trend.join(", ")
    );
    Ok(ReportBody {
        json: json!({
            "law": table.law,
            "t": table.t.to_string(),
            "kappa": table.kappa.to_string(),
            "rows": rows_json,
        }),
        csv_header: vec![
            "n",
            "w1",
            "ref_rate",
            "ratio",
            "pre_asymptotic",
            "omega_mean",
            "omega_variance",
        ],
        csv_rows,
        summary,
        violations: Vec::new(),
    })
}

fn run_poisson(config: &ExperimentConfig) -> Result<ReportBody> {
    require_exact(config)?;
    let a_n = config
        .a_n
        .ok_or_else(|| Error::Usage("poisson requires --a-n".into()))?;
    let time = config.time.unwrap_or(1.0);
    let mut spec = IndicatorProcessSpec::new(a_n)?;
    if let Some(k) = config.truncate_window {
        spec = spec.truncated(k);
    }
    let limits = config.limits();
    let marginal = poisson_marginal_tv(&spec, time, &limits)?;
    let mut violations = marginal.violations();

    let process = match config.n {
        Some(n) => {
            let law = config.law_descriptor()?.build(n)?;
            let report = poisson_process_bound(&spec, &law, &limits)?;
            if !report.tv_vg.certainly_le(&report.rhs) {
                violations.push("combined bound fell below its TV component".into());
            }
            Some(report)
        }
        None => None,
    };

    let summary = format!(
        "poisson: a_n={}, {} window primes -> marginal TV {} <= le-cam {} <= 2/a_n {}{}",
        a_n,
        marginal.window.len(),
        mass_csv(&marginal.tv),
        crate::report::rational_str(&marginal.lecam),
        marginal.two_over_an,
        if violations.is_empty() { "" } else { " [VIOLATED]" }
    );
    Ok(ReportBody {
        json: json!({
            "a_n": a_n,
            "time": time,
            "window": marginal.window,
            "truncated": config.truncate_window,
            "marginal": {
                "tv": mass_json(&marginal.tv),
                "lambda": crate::report::rational_str(&marginal.lambda),
                "lecam": crate::report::rational_str(&marginal.lecam),
                "two_over_an": marginal.two_over_an,
            },
            "process": process.as_ref().map(|p| json!({
                "tv_vg": mass_json(&p.tv_vg),
                "coordwise_sum": mass_json(&p.coordwise_sum),
                "two_over_an": p.two_over_an,
                "rhs": mass_json(&p.rhs),
                "window": p.window,
            })),
        }),
        csv_header: vec![
            "a_n",
            "time",
            "window_size",
            "marginal_tv",
            "lecam",
            "two_over_an",
            "process_tv_vg",
            "process_rhs",
        ],
        csv_rows: vec![vec![
            a_n.to_string(),
            time.to_string(),
            marginal.window.len().to_string(),
            mass_csv(&marginal.tv),
            crate::report::rational_str(&marginal.lecam),
            marginal.two_over_an.to_string(),
            process
                .as_ref()
                .map(|p| mass_csv(&p.tv_vg))
                .unwrap_or_default(),
            process
                .as_ref()
                .map(|p| mass_csv(&p.rhs))
                .unwrap_or_default(),
        ]],
        summary,
        violations,
    })
}

fn run_sweep(config: &ExperimentConfig) -> Result<ReportBody> {
    let n = config.need_n()?;
    let gamma = config.resolve_gamma(n)?;
    let t = ratio_to_f64(&config.t_rational()?);
    let kappa = ratio_to_f64(&config.kappa_rational()?);
    let deltas = config
        .delta_grid
        .clone()
        .ok_or_else(|| Error::Usage("sweep requires --delta-grid".into()))?;
    let epsilons = config
        .epsilon_grid
        .clone()
        .unwrap_or_else(|| vec![config.params.epsilon]);

    let mut rows_json = Vec::new();
    let mut csv_rows = Vec::new();
    for &delta in &deltas {
        for &epsilon in &epsilons {
            let params = BoundParams::for_gamma(&gamma, t, kappa, epsilon, delta)?;
            let main = main_decay_bound(&params);
            let many = many_divisors_bound(delta, epsilon, kappa, params.rho)?;
            let high = high_multiplicity_bound(delta, epsilon, kappa, params.rho)?.bound;
            let small = small_regime_bound_eval(&params).map(|b| b.bound).ok();
            rows_json.push(json!({
                "delta": delta,
                "epsilon": epsilon,
                "main_bound": main.bound,
                "many_divisors": many,
                "high_multiplicity": high,
                "small_regime": small,
            }));
            csv_rows.push(vec![
                delta.to_string(),
                epsilon.to_string(),
                main.bound.to_string(),
                many.to_string(),
                high.to_string(),
                small.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
    }

    let summary = format!(
        "sweep: {} x {} parameter grid over n={}, |window|={}",
        deltas.len(),
        epsilons.len(),
        n,
        gamma.len()
    );
    Ok(ReportBody {
        json: json!({
            "n": n,
            "gamma": gamma.to_json(),
            "t": t,
            "kappa": kappa,
            "rows": rows_json,
        }),
        csv_header: vec![
            "delta",
            "epsilon",
            "main_bound",
            "many_divisors",
            "high_multiplicity",
            "small_regime",
        ],
        csv_rows,
        summary,
        violations: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Command-line front end.

#[derive(Parser)]
#[command(
    name = "kbv",
    version,
    about = "Exact-arithmetic laboratory for prime multiplicity vectors vs geometric vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LawOpts {
    /// Sampling law: uniform | pareto | density | custom.
    #[arg(long, default_value = "uniform")]
    law: String,
    /// Power-law exponent in [0, 1), as a fraction or decimal.
    #[arg(long)]
    s: Option<String>,
    /// Density weight function: k | k^2 | 1/k.
    #[arg(long)]
    upsilon: Option<String>,
    /// Custom-law CSV path ("k,numerator,denominator" lines).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct GammaOpts {
    /// Explicit prime window (comma-separated; wins over other descriptors).
    #[arg(long, value_delimiter = ',')]
    gamma_primes: Option<Vec<u64>>,
    /// Prime window bounds LO,HI.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    gamma_window: Option<Vec<f64>>,
    /// Window exponent: primes up to n^(1/beta).
    #[arg(long)]
    beta: Option<f64>,
    /// First K primes.
    #[arg(long)]
    gamma_size: Option<usize>,
}

#[derive(Args)]
struct ParamOpts {
    /// Hypothesis exponent t > 0 (fraction or decimal).
    #[arg(long, default_value = "1")]
    t: String,
    /// Hypothesis constant kappa >= 1.
    #[arg(long, default_value = "1")]
    kappa: String,
    /// Cardinality-condition slack epsilon > 0.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Regime-splitting constant delta in (0, t/3); defaults to t/4.
    #[arg(long)]
    delta: Option<f64>,
    /// Constant C for the crude 4^|window| bound.
    #[arg(long, default_value_t = 1.0)]
    c_const: f64,
}

#[derive(Args)]
struct CommonOpts {
    /// Arithmetic mode: exact | float.
    #[arg(long, default_value = "exact", global = true)]
    mode: String,
    /// Report format: json | csv.
    #[arg(long, default_value = "json", global = true)]
    output: String,
    /// Report directory (falls back to $KBV_REPORT_DIR, then ".").
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel enumeration.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Exact-mode window-size limit.
    #[arg(long, default_value_t = 16, global = true)]
    max_gamma: usize,
    /// Exact-mode n limit.
    #[arg(long, default_value_t = 10_000_000, global = true)]
    max_n: u64,
    /// Unused placeholder for the float mode's compensated order.
    #[arg(long, default_value_t = 0, global = true)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Exact TV between the multiplicity vector and the geometric vector.
    TvExact {
        #[command(flatten)]
        law: LawOpts,
        #[command(flatten)]
        gamma: GammaOpts,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Certify the divisor-regularity hypothesis for a law.
    CertifyHt {
        #[command(flatten)]
        law: LawOpts,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        params: ParamOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Evaluate the closed-form decay bounds.
    Bound {
        #[command(flatten)]
        gamma: GammaOpts,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        params: ParamOpts,
        /// Truncation order for the remainder bound (odd).
        #[arg(long)]
        gamma_trunc: Option<u32>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Split the TV sum into the three proof regimes and check the bounds.
    Partition {
        #[command(flatten)]
        law: LawOpts,
        #[command(flatten)]
        gamma: GammaOpts,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        params: ParamOpts,
        /// Support-size threshold override.
        #[arg(long)]
        alpha: Option<f64>,
        /// Total-multiplicity threshold override.
        #[arg(long)]
        beta_m: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Truncated inclusion-exclusion sandwich for one event.
    Bonferroni {
        #[command(flatten)]
        law: LawOpts,
        #[command(flatten)]
        gamma: GammaOpts,
        #[arg(long)]
        n: u64,
        /// Divisor-set primes (comma-separated; empty for the empty set).
        #[arg(long, value_delimiter = ',')]
        d: Option<Vec<u64>>,
        /// Multiplicities matching --d.
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<u32>>,
        /// Odd truncation order.
        #[arg(long)]
        gamma_trunc: u32,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Gaussian approximation of the prime-divisor count across an n grid.
    ErdosKac {
        #[command(flatten)]
        law: LawOpts,
        #[arg(long, value_delimiter = ',')]
        n_grid: Vec<u64>,
        #[command(flatten)]
        params: ParamOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Poisson approximation of the small-prime indicator process.
    Poisson {
        #[command(flatten)]
        law: LawOpts,
        /// Window base; atoms are primes in [a_n, a_n^e].
        #[arg(long)]
        a_n: f64,
        /// Process time in [0, 1].
        #[arg(long, default_value_t = 1.0)]
        time: f64,
        /// Sample-range bound for the process-level bound (optional).
        #[arg(long)]
        n: Option<u64>,
        /// Keep only the first K window primes.
        #[arg(long)]
        truncate_window: Option<usize>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Bound values over a delta (x epsilon) parameter grid.
    Sweep {
        #[command(flatten)]
        gamma: GammaOpts,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        params: ParamOpts,
        #[arg(long, value_delimiter = ',')]
        delta_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        epsilon_grid: Option<Vec<f64>>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn apply_law(config: &mut ExperimentConfig, law: LawOpts) {
    config.law = LawConfig {
        kind: law.law,
        s: law.s,
        upsilon: law.upsilon,
        csv: law.csv.map(|p| p.display().to_string()),
    };
}

fn apply_gamma(config: &mut ExperimentConfig, gamma: GammaOpts) {
    config.gamma = GammaConfig {
        primes: gamma.gamma_primes,
        window: gamma.gamma_window.map(|w| [w[0], w[1]]),
        beta: gamma.beta,
        size: gamma.gamma_size,
    };
}

fn apply_params(config: &mut ExperimentConfig, params: ParamOpts) {
    config.params = ParamConfig {
        t: params.t,
        kappa: params.kappa,
        epsilon: params.epsilon,
        delta: params.delta,
        c_const: params.c_const,
        alpha: None,
        beta_m: None,
    };
}

fn apply_common(config: &mut ExperimentConfig, common: &CommonOpts) {
    config.mode = common.mode.clone();
    config.output = common.output.clone();
    config.seed = common.seed;
    config.max_gamma = common.max_gamma;
    config.max_n = common.max_n;
}

impl Cli {
    fn into_parts(self) -> (ExperimentConfig, CommonOpts) {
        match self.command {
            Command::TvExact {
                law,
                gamma,
                n,
                common,
            } => {
                let mut config = ExperimentConfig::base("tv-exact");
                config.n = Some(n);
                apply_law(&mut config, law);
                apply_gamma(&mut config, gamma);
                apply_common(&mut config, &common);
                (config, common)
            }
            Command::CertifyHt {
                law,
                n,
                params,
                common,
            } => {
                let mut config = ExperimentConfig::base("certify-ht");
                config.n = Some(n);
                apply_law(&mut config, law);
                apply_params(&mut config, params);
                apply_common(&mut config, &common);
                (config, common)
            }
            Command::Bound {
                gamma,
                n,
                params,
                gamma_trunc,
                common,
            } => {
                let mut config = ExperimentConfig::base("bound");
                config.n = Some(n);
                config.gamma_trunc = gamma_trunc;
                apply_gamma(&mut config, gamma);
                apply_params(&mut config, params);
                apply_common(&mut config, &common);
                (config, common)
            }
            Command::Partition {
                law,
                gamma,
                n,
                params,
                alpha,
                beta_m,
                common,
            } => {
                let mut config = ExperimentConfig::base("partition");
                config.n = Some(n);
                apply_law(&mut config, law);
                apply_gamma(&mut config, gamma);
                apply_params(&mut config, params);
                config.params.alpha = alpha;
                config.params.beta_m = beta_m;
                apply_common(&mut config, &common);
                (config, common)
            }
            Command::Bonferroni {
                law,
                gamma,
                n,
                d,
                m,
                gamma_trunc,
                common,
            } => {
                let mut config = ExperimentConfig::base("bonferroni");
                config.n = Some(n);
                config.d_primes = Some(d.unwrap_or_default());
                config.m_mults = Some(m.unwrap_or_default());
                config.gamma_trunc = Some(gamma_trunc);
                apply_law(&mut config, law);
                apply_gamma(&mut config, gamma);
                apply_common(&mut config, &common);
                (config, common)
            }
            Command::ErdosKac {
                law,
                n_grid,
                params,
                common,
            } => {
                let mut config = ExperimentConfig::base("erdos-kac");
                config.n_grid = Some(n_grid);
                apply_law(&mut config, law);
                apply_params(&mut config, params);
                apply_common(&mut config, &common);
                (config, common)
            }
            Command::Poisson {
                law,
                a_n,
                time,
                n,
                truncate_window,
                common,
            } => {
                let mut config = ExperimentConfig::base("poisson");
                config.a_n = Some(a_n);
                config.time = Some(time);
                config.n = n;
                config.truncate_window = truncate_window;
                apply_law(&mut config, law);
                apply_common(&mut config, &common);
                (config, common)
            }
            Command::Sweep {
                gamma,
                n,
                params,
                delta_grid,
                epsilon_grid,
                common,
            } => {
                let mut config = ExperimentConfig::base("sweep");
                config.n = Some(n);
                config.delta_grid = Some(delta_grid);
                config.epsilon_grid = epsilon_grid;
                apply_gamma(&mut config, gamma);
                apply_params(&mut config, params);
                apply_common(&mut config, &common);
                (config, common)
            }
        }
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let benign = matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if benign { 0 } else { 1 };
        }
    };
    let (config, common) = cli.into_parts();
    if let Some(jobs) = common.jobs {
        // Best effort: the global pool can only be initialized once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let out_dir = common
        .out
        .or_else(|| std::env::var_os("KBV_REPORT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    match run(&config, &out_dir) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            println!("report: {}", outcome.report_path.display());
            if outcome.violations.is_empty() {
                0
            } else {
                for v in &outcome.violations {
                    eprintln!("hard invariant violated: {v}");
                }
                2
            }
        }
        Err(Error::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
