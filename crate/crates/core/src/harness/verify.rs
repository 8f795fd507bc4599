use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::engine::{estimate, Operator, Problem};
use super::{
    fixtures, FamilySpec, GridPolicy, InstanceConfig, MeasureKind, MeasureSpec, ParamSpec,
    SweepConfig, Theorem,
};
use crate::criteria::{
    decay_test, integral_criterion, sup_criterion, CriterionKind, CriterionSpec,
};
use crate::error::{Error, Result};
use crate::numerics::QuadratureGrid;
use crate::operators::BerezinParams;
use crate::weights::{WeightKind, MEMBERSHIP_SENTINEL};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Diverged,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub theorem: Theorem,
    pub p: f64,
    pub q: f64,
    pub t: Option<f64>,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub weight_kind: String,
    pub measure_kind: String,
    /// `sup` or `L^s` norm of the criterion; `None` when it is infinite.
    pub criterion: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub ratio_low: Option<f64>,
    pub ratio_high: Option<f64>,
    pub verdict: Verdict,
    pub failures: Vec<String>,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRatios {
    pub instance_id: String,
    pub low: Option<f64>,
    pub high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceBand {
    pub ratio_low: f64,
    pub ratio_high: f64,
    pub instance_count: usize,
    pub observed_low: Option<f64>,
    pub observed_high: Option<f64>,
    pub per_instance: Vec<InstanceRatios>,
}

impl EquivalenceBand {
    pub fn from_records(records: &[InstanceRecord]) -> Self {
        let per_instance: Vec<InstanceRatios> = records
            .iter()
            .map(|r| InstanceRatios {
                instance_id: r.instance_id.clone(),
                low: r.ratio_low,
                high: r.ratio_high,
            })
            .collect();
        let lows = per_instance.iter().filter_map(|r| r.low);
        let highs = per_instance.iter().filter_map(|r| r.high);
        EquivalenceBand {
            ratio_low: fixtures::BAND.0,
            ratio_high: fixtures::BAND.1,
            instance_count: records.len(),
            observed_low: lows.reduce(f64::min),
            observed_high: highs.reduce(f64::max),
            per_instance,
        }
    }

    /// Every recorded ratio lies in `[ratio_low, ratio_high]`.
    pub fn holds(&self) -> bool {
        self.per_instance.iter().all(|r| {
            r.low
                .is_none_or(|x| x >= self.ratio_low && x <= self.ratio_high)
                && r.high
                    .is_none_or(|x| x >= self.ratio_low && x <= self.ratio_high)
        })
    }
}

/// Frozen constants next to the smallest constants each weight needed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffConstants {
    pub frozen_suff: [f64; 2],
    pub frozen_carleson: [f64; 2],
    pub observed_per_weight: BTreeMap<String, f64>,
    pub observed_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub config: SweepConfig,
    pub records: Vec<InstanceRecord>,
    pub band: EquivalenceBand,
    pub constants: SuffConstants,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.verdict == Verdict::Pass)
    }

    pub fn diverged(&self) -> bool {
        self.records.iter().any(|r| r.verdict == Verdict::Diverged)
    }
}

fn weight_key(w: &WeightKind) -> String {
    match w {
        WeightKind::Constant { c } => format!("constant(c={c})"),
        WeightKind::ExpLinear { a } => format!("exp-linear(a={a:?})"),
        WeightKind::RadialPowerGauss { s, eps } => format!("radial-power-gauss(s={s},eps={eps})"),
        WeightKind::Tabulated(_) => "tabulated".to_string(),
    }
}

struct Metrics(BTreeMap<String, f64>);

impl Metrics {
    fn put(&mut self, key: &str, v: f64) {
        if v.is_finite() {
            self.0.insert(key.to_string(), v);
        }
    }
}

/// Verifies one instance; numerical divergence (including overflow to a non-finite
/// value) becomes a `diverged` record, invalid configurations are errors.
pub fn verify_instance(inst: &InstanceConfig) -> Result<InstanceRecord> {
    let ParamSpec {
        p,
        q,
        t,
        alpha,
        beta,
    } = inst.params;
    let mut record = InstanceRecord {
        instance_id: inst.id.clone(),
        theorem: inst.theorem,
        p,
        q,
        t,
        alpha,
        beta,
        weight_kind: inst.weight.label().to_string(),
        measure_kind: inst.measure.kind.label().to_string(),
        criterion: None,
        lower: None,
        upper: None,
        ratio_low: None,
        ratio_high: None,
        verdict: Verdict::Pass,
        failures: Vec::new(),
        metrics: BTreeMap::new(),
    };
    match evaluate(inst, &mut record) {
        Ok(()) => {}
        Err(e @ (Error::Diverged(_) | Error::NumericalDomain { .. })) => {
            record.verdict = Verdict::Diverged;
            record.failures.push(e.to_string());
            return Ok(record);
        }
        Err(e) => return Err(e),
    }
    if !record.failures.is_empty() {
        record.verdict = Verdict::Fail;
    }
    Ok(record)
}

fn evaluate(inst: &InstanceConfig, record: &mut InstanceRecord) -> Result<()> {
    let ParamSpec {
        p,
        q,
        t,
        alpha,
        beta,
    } = inst.params;
    let theorem = inst.theorem;
    if !theorem.regime_matches(p, q) {
        return Err(Error::invalid(format!(
            "instance {}: theorem {} does not apply to p = {p}, q = {q}",
            inst.id,
            theorem.label()
        )));
    }
    let mu = inst.build_measure()?;
    let w = inst.build_weight()?;
    let dim = inst.dim;
    let kind = theorem.criterion_kind();
    let (op, spec_t) = match kind {
        CriterionKind::G => {
            let bp = BerezinParams::new(
                t.ok_or_else(|| Error::invalid("BerezinParams.t is required by main1 theorems"))?,
                alpha,
                beta.ok_or_else(|| {
                    Error::invalid("BerezinParams.beta is required by main1 theorems")
                })?,
            )?;
            (
                Operator::Berezin {
                    t: bp.t,
                    beta: bp.beta,
                },
                Some(bp.t),
            )
        }
        CriterionKind::H => (Operator::Toeplitz, None),
        CriterionKind::CM => (Operator::Embedding, None),
    };
    let spec = CriterionSpec::new(kind, p, q, spec_t, w.clone(), mu.clone())?;
    let policy = inst.grid.criteria_policy();
    let mut m = Metrics(BTreeMap::new());

    let sup = sup_criterion(&spec, policy.r_sup, policy.fine_step)?;
    m.put("sup_fine", sup.fine_sup);
    m.put("sup_lattice", sup.lattice_sup);
    let decay = decay_test(
        &spec,
        &policy.shell_radii,
        policy.eps_rel * sup.fine_sup,
        policy.decay_step,
    )?;
    m.put("decay_last_shell", decay.shells.last().map_or(0.0, |s| s.1));
    m.put("decay_vanishing", decay.vanishing as u8 as f64);
    let outermost = policy.shell_radii.last().copied().unwrap_or(0.0) + 2.0;
    if let Some(expected) = inst.measure.expected_vanishing(outermost) {
        m.put("expected_vanishing", expected as u8 as f64);
        if expected != decay.vanishing {
            record.failures.push(format!(
                "decay verdict {} but the measure is known to give {expected}",
                decay.vanishing
            ));
        }
    }

    let criterion = if p <= q {
        (sup.fine_sup < MEMBERSHIP_SENTINEL).then_some(sup.fine_sup)
    } else {
        let grid = QuadratureGrid::new(policy.integral_step, policy.integral_radius, dim)?;
        let ic = integral_criterion(&spec, &grid)?;
        m.put("integral_direct", ic.direct);
        m.put("integral_lattice", ic.lattice);
        ic.integrable.then_some(ic.direct)
    };
    record.criterion = criterion;
    // the embedding norm is compared with the q-th root of its criterion
    let scale = |c: f64| {
        if kind == CriterionKind::CM {
            c.powf(1.0 / q)
        } else {
            c
        }
    };

    let grid = QuadratureGrid::new(inst.grid.step, inst.grid.radius, dim)?;
    let constant = if kind == CriterionKind::CM {
        fixtures::c_carleson(dim)
    } else {
        fixtures::c_suff(dim)
    };
    let prob = Problem {
        mu: &mu,
        w: &w,
        p,
        q,
        alpha,
        op,
        grid: &grid,
        family: inst.family,
        seed: inst.seed,
    };
    let est = estimate(&prob, constant)?;
    if !(est.lower.is_finite() && est.upper.is_finite()) {
        return Err(Error::Diverged(format!(
            "norm bounds are not finite (lower {}, upper {})",
            est.lower, est.upper
        )));
    }
    record.lower = Some(est.lower);
    record.upper = Some(est.upper);
    m.put("observed_constant", est.observed_constant);
    m.put("frozen_constant", constant);
    m.put("family_members", est.members as f64);
    m.put("best_member", est.best_member as f64);
    m.put("samples", est.samples as f64);
    m.put("lattice_cells", est.lattice_cells as f64);
    m.put("shell_fraction", est.shell_fraction);

    if !est.sandwich_holds {
        record.failures.push(format!(
            "sandwich violated: needs constant {:.6e} > frozen {constant:.6e}",
            est.observed_constant
        ));
    }
    if est.shell_fraction > 1e-3 {
        record.failures.push(format!(
            "grid radius {} truncates {:.3e} of a norm integral",
            inst.grid.radius, est.shell_fraction
        ));
    }
    match criterion {
        Some(c) if c > 0.0 => {
            let c = scale(c);
            let (lo, hi) = (est.lower / c, est.upper / c);
            record.ratio_low = Some(lo);
            record.ratio_high = Some(hi);
            let (a, b) = fixtures::BAND;
            for (name, r) in [("lower", lo), ("upper", hi)] {
                if !(r >= a && r <= b) {
                    record
                        .failures
                        .push(format!("{name}/criterion = {r:.6e} outside [{a}, {b}]"));
                }
            }
        }
        Some(_) => {
            if est.lower > 0.0 {
                record.failures.push(format!(
                    "criterion vanishes but the operator moves a test function ({:.3e})",
                    est.lower
                ));
            }
        }
        None => m.put("criterion_unbounded", 1.0),
    }
    record.metrics = m.0;
    Ok(())
}

fn constants_for(records: &[InstanceRecord], config: &SweepConfig) -> SuffConstants {
    let mut per_weight = BTreeMap::new();
    let mut max = 0.0f64;
    for (r, inst) in records.iter().zip(&config.instances) {
        if let Some(c) = r.metrics.get("observed_constant") {
            let e = per_weight.entry(weight_key(&inst.weight)).or_insert(0.0f64);
            *e = e.max(*c);
            max = max.max(*c);
        }
    }
    SuffConstants {
        frozen_suff: fixtures::C_SUFF,
        frozen_carleson: fixtures::C_CARLESON,
        observed_per_weight: per_weight,
        observed_max: max,
    }
}

/// Report for records produced from `config`, in instance order.
pub fn assemble_report(config: &SweepConfig, records: Vec<InstanceRecord>) -> Report {
    Report {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        band: EquivalenceBand::from_records(&records),
        constants: constants_for(&records, config),
        records,
    }
}

/// Runs every instance of the sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<Report> {
    let records = config
        .instances
        .iter()
        .map(verify_instance)
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(config, records))
}

/// Verifies the instances of `config` that target `theorem`.
pub fn verify_theorem(
    config: &SweepConfig,
    theorem: Theorem,
) -> Result<(EquivalenceBand, Vec<InstanceRecord>)> {
    let records = config
        .instances
        .iter()
        .filter(|i| i.theorem == theorem)
        .map(verify_instance)
        .collect::<Result<Vec<_>>>()?;
    Ok((EquivalenceBand::from_records(&records), records))
}

/// The four measures of the default sweep, with short names.
pub fn shipped_measures() -> Vec<(&'static str, MeasureKind)> {
    vec![
        (
            "cloud",
            MeasureKind::RandomCloud {
                count: 12,
                radius: 3.0,
                mass_low: 0.5,
                mass_high: 1.5,
            },
        ),
        (
            "lattice",
            MeasureKind::LatticeGaussian {
                sigma: 0.5,
                cutoff: 8.0,
            },
        ),
        ("gauss", MeasureKind::GaussianDensity { c: 1.0, sigma: 0.5 }),
        (
            "ball",
            MeasureKind::BallDensity {
                c: 1.0,
                radius: 2.0,
            },
        ),
    ]
}

/// The three weights of the default sweep (`n = 1`), with short names.
pub fn shipped_weights() -> Vec<(&'static str, WeightKind)> {
    vec![
        ("const", WeightKind::Constant { c: 1.0 }),
        ("explin", WeightKind::ExpLinear { a: vec![0.5, 0.0] }),
        ("radial", WeightKind::RadialPowerGauss { s: 1.0, eps: 0.0 }),
    ]
}

/// Seed of the default sweep.
pub const DEFAULT_SEED: u64 = 7;

/// Four measures × three weights × two exponent regimes at `n = 1`.
/// Berezin-type and Toeplitz instances alternate in a checkerboard over
/// (measure, weight).
pub fn default_sweep() -> SweepConfig {
    let measures = shipped_measures();
    let weights = shipped_weights();
    let mut instances = Vec::new();
    for (mi, (mname, mk)) in measures.iter().enumerate() {
        for (wi, (wname, wk)) in weights.iter().enumerate() {
            let berezin = (mi + wi) % 2 == 0;
            for regime in ["A", "B"] {
                let (p, q, t, beta) = if regime == "A" {
                    (1.0, 2.0, 2.0, 1.0)
                } else {
                    (2.0, 1.0, 1.0, 2.0)
                };
                let theorem = match (berezin, regime) {
                    (true, "A") => Theorem::Main1Sup,
                    (true, _) => Theorem::Main1Int,
                    (false, "A") => Theorem::Main2Sup,
                    (false, _) => Theorem::Main2Int,
                };
                instances.push(InstanceConfig {
                    id: format!("{mname}-{wname}-{regime}"),
                    theorem,
                    dim: 1,
                    measure: MeasureSpec::new(mk.clone()),
                    weight: wk.clone(),
                    params: ParamSpec {
                        p,
                        q,
                        t: berezin.then_some(t),
                        alpha: 1.0,
                        beta: berezin.then_some(beta),
                    },
                    grid: GridPolicy::for_dim(1),
                    family: FamilySpec::for_dim(1),
                    seed: DEFAULT_SEED,
                });
            }
        }
    }
    SweepConfig { instances }
}
