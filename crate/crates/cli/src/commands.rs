//! The six commands. Each runs over every instance of the config.

use std::time::Instant;

use focklab_core::criteria::{
    criterion_report, product_carleson_check, CriterionKind, CriterionReport, CriterionSpec,
};
use focklab_core::error::Error;
use focklab_core::harness::{
    assemble_report, estimate_s_norm_lower, estimate_t_norm_lower, verify_instance, InstanceConfig,
    InstanceRecord, Report, Theorem, Verdict,
};
use focklab_core::numerics::{lattice_points, Point, QuadratureGrid};
use focklab_core::operators::BerezinParams;
use focklab_core::spaces::{normalized_kernel, FockParams};
use focklab_core::weights::{
    a_infinity_verdict, weight_class_report, AInfinityVerdict, WeightClassReport,
};
use serde::Serialize;

use crate::config::{Config, ConfigErrors, ProductSpec};
use crate::report::{float, opt, to_csv, to_json, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    WeightClass,
    Carleson,
    Criterion,
    Snorm,
    Tnorm,
    Verify,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Write(#[from] crate::report::WriteError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("instance {id}: {source}")]
    Numerics { id: String, source: Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerics { source, .. } if source.is_divergence() => 3,
            _ => 2,
        }
    }
}

/// One failing instance, as listed on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub instance_id: String,
    pub verdict: Verdict,
    pub failures: Vec<String>,
}

pub struct Output {
    pub text: String,
    pub failures: Vec<Failure>,
}

impl Output {
    pub fn exit_code(&self) -> i32 {
        if self.failures.iter().any(|f| f.verdict == Verdict::Diverged) {
            3
        } else if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

fn numerics(inst: &InstanceConfig) -> impl Fn(Error) -> CliError + '_ {
    move |source| CliError::Numerics {
        id: inst.id.clone(),
        source,
    }
}

fn failure_of(r: &InstanceRecord) -> Option<Failure> {
    (r.verdict != Verdict::Pass).then(|| Failure {
        instance_id: r.instance_id.clone(),
        verdict: r.verdict,
        failures: r.failures.clone(),
    })
}

fn norm_grid(inst: &InstanceConfig) -> Result<QuadratureGrid, CliError> {
    QuadratureGrid::new(inst.grid.step, inst.grid.radius, inst.dim).map_err(numerics(inst))
}

pub fn run(
    command: Command,
    config: &Config,
    format: Format,
    progress: &mut dyn FnMut(&str),
) -> Result<Output, CliError> {
    let n = config.sweep.instances.len();
    let mut step = |i: usize, inst: &InstanceConfig, started: Instant, note: &str| {
        progress(&format!(
            "[{}/{n}] {} {note} ({:.1}s)",
            i + 1,
            inst.id,
            started.elapsed().as_secs_f64()
        ));
    };
    match command {
        Command::Verify => {
            let mut records = Vec::with_capacity(n);
            for (i, inst) in config.sweep.instances.iter().enumerate() {
                let t0 = Instant::now();
                let r = verify_instance(inst).map_err(numerics(inst))?;
                step(i, inst, t0, r.verdict.label());
                records.push(r);
            }
            let report = assemble_report(&config.sweep, records);
            let failures = report.records.iter().filter_map(failure_of).collect();
            Ok(Output {
                text: crate::report::emit_report(&report, format),
                failures,
            })
        }
        Command::Criterion => {
            let mut out = Vec::with_capacity(n);
            for (i, inst) in config.sweep.instances.iter().enumerate() {
                let t0 = Instant::now();
                out.push(criterion(inst)?);
                step(i, inst, t0, "done");
            }
            Ok(Output {
                text: match format {
                    Format::Json => to_json(&out),
                    Format::Csv => criterion_csv(&out),
                },
                failures: Vec::new(),
            })
        }
        Command::Snorm | Command::Tnorm => {
            let mut out = Vec::with_capacity(n);
            for (i, inst) in config.sweep.instances.iter().enumerate() {
                let t0 = Instant::now();
                out.push(norm_lower(inst, command == Command::Snorm)?);
                step(i, inst, t0, "done");
            }
            Ok(Output {
                text: match format {
                    Format::Json => to_json(&out),
                    Format::Csv => norm_csv(&out),
                },
                failures: Vec::new(),
            })
        }
        Command::WeightClass => {
            let mut out = Vec::with_capacity(n);
            for (i, inst) in config.sweep.instances.iter().enumerate() {
                let t0 = Instant::now();
                out.push(weight_class(inst)?);
                step(i, inst, t0, "done");
            }
            Ok(Output {
                text: match format {
                    Format::Json => to_json(&out),
                    Format::Csv => weight_class_csv(&out),
                },
                failures: Vec::new(),
            })
        }
        Command::Carleson => {
            let mut out = Vec::with_capacity(n);
            for (i, inst) in config.sweep.instances.iter().enumerate() {
                let t0 = Instant::now();
                let c = carleson(inst, config.products.get(i).and_then(Option::as_ref))?;
                step(i, inst, t0, c.embedding.verdict.label());
                out.push(c);
            }
            let failures = out
                .iter()
                .filter_map(|c| failure_of(&c.embedding))
                .collect();
            Ok(Output {
                text: match format {
                    Format::Json => to_json(&out),
                    Format::Csv => carleson_csv(&out),
                },
                failures,
            })
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutput {
    pub instance_id: String,
    pub kind: CriterionKind,
    pub p: f64,
    pub q: f64,
    pub t: Option<f64>,
    pub report: CriterionReport,
}

fn spec_of(inst: &InstanceConfig, kind: CriterionKind) -> Result<CriterionSpec, CliError> {
    let t = if kind == CriterionKind::G {
        inst.params.t
    } else {
        None
    };
    let mu = inst.build_measure().map_err(numerics(inst))?;
    let w = inst.build_weight().map_err(numerics(inst))?;
    CriterionSpec::new(kind, inst.params.p, inst.params.q, t, w, mu).map_err(numerics(inst))
}

fn criterion(inst: &InstanceConfig) -> Result<CriterionOutput, CliError> {
    let kind = inst.theorem.criterion_kind();
    let spec = spec_of(inst, kind)?;
    let report = criterion_report(&spec, &inst.grid.criteria_policy()).map_err(numerics(inst))?;
    Ok(CriterionOutput {
        instance_id: inst.id.clone(),
        kind,
        p: spec.p,
        q: spec.q,
        t: spec.t,
        report,
    })
}

fn criterion_csv(out: &[CriterionOutput]) -> String {
    let rows: Vec<Vec<String>> = out
        .iter()
        .map(|c| {
            let r = &c.report;
            vec![
                c.instance_id.clone(),
                format!("{:?}", c.kind),
                float(c.p),
                float(c.q),
                opt(c.t),
                float(r.sup.fine_sup),
                float(r.sup.lattice_sup),
                opt(r.integral.map(|i| i.direct)),
                opt(r.integral.map(|i| i.lattice)),
                r.verdicts.bounded.to_string(),
                r.verdicts.vanishing.to_string(),
                r.verdicts
                    .integrable
                    .map(|b| b.to_string())
                    .unwrap_or_default(),
            ]
        })
        .collect();
    to_csv(
        &[
            "instance_id",
            "kind",
            "p",
            "q",
            "t",
            "fine_sup",
            "lattice_sup",
            "integral_direct",
            "integral_lattice",
            "bounded",
            "vanishing",
            "integrable",
        ],
        &rows,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct NormOutput {
    pub instance_id: String,
    pub operator: &'static str,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub t: Option<f64>,
    pub beta: Option<f64>,
    /// Largest norm ratio over the test family.
    pub lower: f64,
}

fn norm_lower(inst: &InstanceConfig, berezin: bool) -> Result<NormOutput, CliError> {
    let mu = inst.build_measure().map_err(numerics(inst))?;
    let w = inst.build_weight().map_err(numerics(inst))?;
    let grid = norm_grid(inst)?;
    let p = inst.params;
    let lower = if berezin {
        let (Some(t), Some(beta)) = (p.t, p.beta) else {
            return Err(ConfigErrors(vec![format!(
                "instance {}: snorm needs params.t and params.beta (BerezinParams.t, BerezinParams.beta)",
                inst.id
            )])
            .into());
        };
        let bp = BerezinParams::new(t, p.alpha, beta).map_err(numerics(inst))?;
        estimate_s_norm_lower(&mu, &bp, p.p, p.q, &w, &inst.family, inst.seed, &grid)
    } else {
        estimate_t_norm_lower(&mu, p.alpha, p.p, p.q, &w, &inst.family, inst.seed, &grid)
    }
    .map_err(numerics(inst))?;
    Ok(NormOutput {
        instance_id: inst.id.clone(),
        operator: if berezin { "berezin" } else { "toeplitz" },
        p: p.p,
        q: p.q,
        alpha: p.alpha,
        t: if berezin { p.t } else { None },
        beta: if berezin { p.beta } else { None },
        lower,
    })
}

fn norm_csv(out: &[NormOutput]) -> String {
    let rows: Vec<Vec<String>> = out
        .iter()
        .map(|o| {
            vec![
                o.instance_id.clone(),
                o.operator.to_string(),
                float(o.p),
                float(o.q),
                float(o.alpha),
                opt(o.t),
                opt(o.beta),
                float(o.lower),
            ]
        })
        .collect();
    to_csv(
        &[
            "instance_id",
            "operator",
            "p",
            "q",
            "alpha",
            "t",
            "beta",
            "lower",
        ],
        &rows,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightClassOutput {
    pub instance_id: String,
    pub weight_kind: String,
    /// Constants at cube sides `r = 1` and `r = 2`.
    pub classes: Vec<WeightClassReport>,
    pub a_infinity: AInfinityVerdict,
}

fn weight_class(inst: &InstanceConfig) -> Result<WeightClassOutput, CliError> {
    let w = inst.build_weight().map_err(numerics(inst))?;
    let r_sup = inst.grid.r_sup;
    let classes = [1.0, 2.0]
        .into_iter()
        .map(|r| weight_class_report(&w, inst.params.p, r, r_sup))
        .collect::<Result<Vec<_>, _>>()
        .map_err(numerics(inst))?;
    let a_infinity = a_infinity_verdict(&w, 1.0, r_sup).map_err(numerics(inst))?;
    Ok(WeightClassOutput {
        instance_id: inst.id.clone(),
        weight_kind: inst.weight.label().to_string(),
        classes,
        a_infinity,
    })
}

fn weight_class_csv(out: &[WeightClassOutput]) -> String {
    let mut rows = Vec::new();
    for o in out {
        for c in &o.classes {
            rows.push(vec![
                o.instance_id.clone(),
                o.weight_kind.clone(),
                float(c.p),
                float(c.r),
                float(c.ap_constant),
                opt(c.a1_constant),
                float(c.doubling_constant),
                float(c.lattice_growth_constant),
                o.a_infinity.member.to_string(),
            ]);
        }
    }
    to_csv(
        &[
            "instance_id",
            "weight_kind",
            "p",
            "r",
            "ap_constant",
            "a1_constant",
            "doubling_constant",
            "lattice_growth_constant",
            "a_infinity_member",
        ],
        &rows,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductRatio {
    pub alphas: Vec<f64>,
    pub lambda: f64,
    /// Largest ratio over the kernel centers; `None` when every ratio is undefined.
    pub ratio: Option<f64>,
    pub best_center: Option<Point>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CarlesonOutput {
    pub instance_id: String,
    pub p: f64,
    pub q: f64,
    pub report: CriterionReport,
    /// Embedding norm bounds against the criterion.
    pub embedding: InstanceRecord,
    pub product: Vec<ProductRatio>,
}

fn carleson(
    inst: &InstanceConfig,
    product: Option<&ProductSpec>,
) -> Result<CarlesonOutput, CliError> {
    let report = criterion_report(
        &spec_of(inst, CriterionKind::CM)?,
        &inst.grid.criteria_policy(),
    )
    .map_err(numerics(inst))?;
    let mut as_cm = inst.clone();
    as_cm.theorem = Theorem::Carleson;
    as_cm.params.t = None;
    as_cm.params.beta = None;
    let embedding = verify_instance(&as_cm).map_err(numerics(inst))?;

    let (p, q, alpha) = (inst.params.p, inst.params.q, inst.params.alpha);
    let default = ProductSpec {
        exponents: vec![(p, q)],
        alphas: vec![vec![alpha], vec![2.0 * alpha]],
    };
    let spec = product.unwrap_or(&default);
    let mu = inst.build_measure().map_err(numerics(inst))?;
    let w = inst.build_weight().map_err(numerics(inst))?;
    let grid = norm_grid(inst)?;
    let centers =
        lattice_points(1.0, inst.family.kernel_box as f64, inst.dim).map_err(numerics(inst))?;
    let lambda: f64 = spec.exponents.iter().map(|(p, q)| q / p).sum();
    let mut ratios = Vec::new();
    for alphas in &spec.alphas {
        let factors: Vec<(f64, f64, f64)> = spec
            .exponents
            .iter()
            .zip(alphas)
            .map(|((p, q), a)| (*p, *q, *a))
            .collect();
        let mut best: Option<(f64, Point)> = None;
        for c in &centers {
            let functions = factors
                .iter()
                .map(|(p, _, a)| normalized_kernel(c, &FockParams::new(*p, *a, w.clone())?))
                .collect::<Result<Vec<_>, _>>()
                .map_err(numerics(inst))?;
            let r = product_carleson_check(&mu, &w, lambda, &factors, &functions, &grid)
                .map_err(numerics(inst))?;
            if let Some(v) = r.value() {
                if best.is_none_or(|(b, _)| v > b) {
                    best = Some((v, *c));
                }
            }
        }
        ratios.push(ProductRatio {
            alphas: alphas.clone(),
            lambda,
            ratio: best.map(|b| b.0),
            best_center: best.map(|b| b.1),
        });
    }
    Ok(CarlesonOutput {
        instance_id: inst.id.clone(),
        p,
        q,
        report,
        embedding,
        product: ratios,
    })
}

fn carleson_csv(out: &[CarlesonOutput]) -> String {
    let mut rows = Vec::new();
    for o in out {
        let e = &o.embedding;
        for pr in &o.product {
            let alphas: Vec<String> = pr.alphas.iter().map(|a| float(*a)).collect();
            rows.push(vec![
                o.instance_id.clone(),
                float(o.p),
                float(o.q),
                opt(e.criterion),
                opt(e.lower),
                opt(e.upper),
                opt(e.ratio_low),
                opt(e.ratio_high),
                e.verdict.label().to_string(),
                alphas.join(";"),
                float(pr.lambda),
                opt(pr.ratio),
            ]);
        }
    }
    to_csv(
        &[
            "instance_id",
            "p",
            "q",
            "criterion",
            "lower",
            "upper",
            "ratio_low",
            "ratio_high",
            "verdict",
            "alphas",
            "lambda",
            "product_ratio",
        ],
        &rows,
    )
}

/// Report of a verify run, for callers that want the structure rather than text.
pub fn verify_report(config: &Config) -> Result<Report, CliError> {
    let records = config
        .sweep
        .instances
        .iter()
        .map(|inst| verify_instance(inst).map_err(numerics(inst)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_report(&config.sweep, records))
}
