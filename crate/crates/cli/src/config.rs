//! Sweep configs as TOML.
//!
//! Top-level `seed`, `dim`, `[grid]` and `[family]` are defaults; each
//! `[[instance]]` carries `measure`, `weight`, `params` and optional
//! overrides. Emission writes every instance fully expanded, with floats in
//! 17 significant digits, so `emit(parse(emit(x))) == emit(x)` byte for byte.

use std::collections::BTreeSet;
use std::fmt;

use focklab_core::harness::{
    FamilySpec, GridPolicy, InstanceConfig, MeasureSpec, ParamSpec, SweepConfig, Theorem,
};
use focklab_core::weights::WeightKind;
use toml::{Table, Value};

/// Exponent pairs and α-tuples of the product-type Carleson check.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpec {
    pub exponents: Vec<(f64, f64)>,
    /// Each tuple has one α per exponent pair.
    pub alphas: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub sweep: SweepConfig,
    /// Aligned with `sweep.instances`.
    pub products: Vec<Option<ProductSpec>>,
}

/// Every problem found in a config, not just the first.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const TOP_KEYS: &[&str] = &["seed", "dim", "grid", "family", "instance"];
const INSTANCE_KEYS: &[&str] = &[
    "id", "theorem", "dim", "seed", "measure", "weight", "params", "grid", "family", "product",
];
const PARAM_KEYS: &[&str] = &["p", "q", "t", "alpha", "beta"];
const GRID_KEYS: &[&str] = &[
    "step",
    "radius",
    "fine_step",
    "r_sup",
    "integral_step",
    "integral_radius",
    "shell_radii",
    "decay_step",
    "eps_rel",
];
const FAMILY_KEYS: &[&str] = &["kernel_box", "rademacher_radius", "rademacher_draws"];
const PRODUCT_KEYS: &[&str] = &["exponents", "alphas"];
/// Integer-valued fields of measure and weight kinds; every other number is a float.
const INTEGER_FIELDS: &[&str] = &["count", "half_width"];

fn measure_fields(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "zero" | "lebesgue" => &[],
        "dirac" => &["location", "mass"],
        "atoms" => &["locations", "masses"],
        "random-cloud" => &["count", "radius", "mass_low", "mass_high"],
        "lattice-gaussian" => &["sigma", "cutoff"],
        "lattice-power" => &["tau", "cutoff"],
        "gaussian-density" => &["c", "sigma"],
        "ball-density" => &["c", "radius"],
        _ => return None,
    })
}

fn weight_fields(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "constant" => &["c"],
        "exp-linear" => &["a"],
        "radial-power-gauss" => &["s", "eps"],
        "tabulated" => &["step", "half_width", "values", "interp"],
        _ => return None,
    })
}

#[derive(Default)]
struct Walker {
    errors: Vec<String>,
}

impl Walker {
    fn err(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn check_keys(&mut self, t: &Table, section: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(format!("unknown key `{k}` in section [{section}]"));
            }
        }
    }

    fn float(&mut self, t: &Table, section: &str, key: &str) -> Option<f64> {
        match t.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.err(format!(
                    "{section}.{key} must be a number, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn required_float(&mut self, t: &Table, section: &str, key: &str) -> Option<f64> {
        if !t.contains_key(key) {
            self.err(format!("missing required field {section}.{key}"));
            return None;
        }
        self.float(t, section, key)
    }

    fn uint(&mut self, t: &Table, section: &str, key: &str) -> Option<u64> {
        match t.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            other => {
                self.err(format!(
                    "{section}.{key} must be a non-negative integer, got {other}"
                ));
                None
            }
        }
    }

    fn string<'a>(&mut self, t: &'a Table, section: &str, key: &str) -> Option<&'a str> {
        match t.get(key) {
            None => {
                self.err(format!("missing required field {section}.{key}"));
                None
            }
            Some(Value::String(s)) => Some(s),
            Some(other) => {
                self.err(format!(
                    "{section}.{key} must be a string, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn table<'a>(&mut self, t: &'a Table, section: &str, key: &str) -> Option<&'a Table> {
        match t.get(key)? {
            Value::Table(x) => Some(x),
            other => {
                self.err(format!(
                    "{section}.{key} must be a table, got {}",
                    other.type_str()
                ));
                None
            }
        }
    }

    fn floats(&mut self, v: &Value, what: &str) -> Option<Vec<f64>> {
        let Value::Array(a) = v else {
            self.err(format!("{what} must be an array of numbers"));
            return None;
        };
        a.iter()
            .map(|x| match x {
                Value::Float(f) => Some(*f),
                Value::Integer(i) => Some(*i as f64),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .or_else(|| {
                self.err(format!("{what} must be an array of numbers"));
                None
            })
    }

    fn apply_grid(&mut self, grid: &mut GridPolicy, t: &Table, section: &str) {
        self.check_keys(t, section, GRID_KEYS);
        let slots: [(&str, &mut f64); 8] = [
            ("step", &mut grid.step),
            ("radius", &mut grid.radius),
            ("fine_step", &mut grid.fine_step),
            ("r_sup", &mut grid.r_sup),
            ("integral_step", &mut grid.integral_step),
            ("integral_radius", &mut grid.integral_radius),
            ("decay_step", &mut grid.decay_step),
            ("eps_rel", &mut grid.eps_rel),
        ];
        for (key, slot) in slots {
            if let Some(x) = self.float(t, section, key) {
                if x > 0.0 && x.is_finite() {
                    *slot = x;
                } else {
                    self.err(format!("{section}.{key} must be positive, got {x}"));
                }
            }
        }
        if let Some(v) = t.get("shell_radii") {
            if let Some(r) = self.floats(v, &format!("{section}.shell_radii")) {
                if r.is_empty() || r.windows(2).any(|w| w[1] <= w[0]) {
                    self.err(format!(
                        "{section}.shell_radii must be non-empty and increasing"
                    ));
                } else {
                    grid.shell_radii = r;
                }
            }
        }
    }

    fn apply_family(&mut self, family: &mut FamilySpec, t: &Table, section: &str) {
        self.check_keys(t, section, FAMILY_KEYS);
        if let Some(b) = self.uint(t, section, "kernel_box") {
            family.kernel_box = b as u32;
        }
        if let Some(r) = self.float(t, section, "rademacher_radius") {
            if r >= 0.0 {
                family.rademacher_radius = r;
            } else {
                self.err(format!(
                    "{section}.rademacher_radius must be non-negative, got {r}"
                ));
            }
        }
        if let Some(d) = self.uint(t, section, "rademacher_draws") {
            family.rademacher_draws = d as usize;
        }
    }

    /// Validates the keys of a tagged measure/weight table and deserializes it.
    fn tagged<T: serde::de::DeserializeOwned>(
        &mut self,
        t: &Table,
        section: &str,
        fields: fn(&str) -> Option<&'static [&'static str]>,
        extra: &[&str],
    ) -> Option<T> {
        let kind = self.string(t, section, "kind")?;
        let Some(required) = fields(kind) else {
            self.err(format!("unknown {section}.kind `{kind}`"));
            return None;
        };
        let mut allowed: Vec<&str> = vec!["kind"];
        allowed.extend_from_slice(required);
        allowed.extend_from_slice(extra);
        let before = self.errors.len();
        self.check_keys(t, section, &allowed);
        for f in required {
            if !t.contains_key(*f) {
                self.err(format!(
                    "missing required field {section}.{f} (kind `{kind}`)"
                ));
            }
        }
        if self.errors.len() > before {
            return None;
        }
        let coerced: Table = t
            .iter()
            .map(|(k, v)| {
                let v = if INTEGER_FIELDS.contains(&k.as_str()) {
                    v.clone()
                } else {
                    to_floats(v)
                };
                (k.clone(), v)
            })
            .collect();
        match Value::Table(coerced).try_into::<T>() {
            Ok(x) => Some(x),
            Err(e) => {
                self.err(format!("[{section}]: {}", e.to_string().trim()));
                None
            }
        }
    }

    fn params(&mut self, t: &Table, section: &str, theorem: Option<Theorem>) -> Option<ParamSpec> {
        self.check_keys(t, section, PARAM_KEYS);
        let p = self.required_float(t, section, "p");
        let q = self.required_float(t, section, "q");
        let alpha = self.required_float(t, section, "alpha");
        for (name, v) in [("p", p), ("q", q), ("alpha", alpha)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    self.err(format!("{section}.{name} must be positive, got {v}"));
                }
            }
        }
        let berezin = theorem.is_some_and(Theorem::uses_berezin_params);
        let mut opt = |name: &str| -> Option<f64> {
            let v = if berezin {
                self.required_float(t, section, name)
            } else {
                if t.contains_key(name) {
                    self.err(format!(
                        "{section}.{name} only applies to main1-sup and main1-int (BerezinParams.{name})"
                    ));
                }
                None
            };
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    self.err(format!(
                        "BerezinParams.{name} must be positive, got {x} ({section}.{name})"
                    ));
                }
            }
            v
        };
        let t_ = opt("t");
        let beta = opt("beta");
        let (p, q, alpha) = (p?, q?, alpha?);
        if let Some(th) = theorem {
            if !th.regime_matches(p, q) {
                let need = if p <= q { "p > q" } else { "p <= q" };
                self.err(format!(
                    "regime mismatch in [{section}]: theorem {} needs {need}, got p = {p}, q = {q}",
                    th.label()
                ));
            }
        }
        Some(ParamSpec {
            p,
            q,
            t: t_,
            alpha,
            beta,
        })
    }

    fn product(&mut self, t: &Table, section: &str) -> Option<ProductSpec> {
        self.check_keys(t, section, PRODUCT_KEYS);
        let pairs = |w: &mut Walker, key: &str| -> Option<Vec<Vec<f64>>> {
            let Some(Value::Array(rows)) = t.get(key) else {
                w.err(format!(
                    "missing required field {section}.{key} (array of arrays)"
                ));
                return None;
            };
            rows.iter()
                .map(|r| w.floats(r, &format!("{section}.{key}[]")))
                .collect()
        };
        let exps = pairs(self, "exponents");
        let alphas = pairs(self, "alphas");
        let (exps, alphas) = (exps?, alphas?);
        let k = exps.len();
        let mut ok = true;
        if !(1..=2).contains(&k)
            || exps
                .iter()
                .any(|e| e.len() != 2 || e.iter().any(|x| !(*x > 0.0)))
        {
            self.err(format!(
                "{section}.exponents must hold 1 or 2 positive [p, q] pairs"
            ));
            ok = false;
        }
        if alphas.is_empty()
            || alphas
                .iter()
                .any(|a| a.len() != k || a.iter().any(|x| !(*x > 0.0)))
        {
            self.err(format!(
                "{section}.alphas must hold tuples of {k} positive values"
            ));
            ok = false;
        }
        ok.then(|| ProductSpec {
            exponents: exps.iter().map(|e| (e[0], e[1])).collect(),
            alphas,
        })
    }
}

fn to_floats(v: &Value) -> Value {
    match v {
        Value::Integer(i) => Value::Float(*i as f64),
        Value::Array(a) => Value::Array(a.iter().map(to_floats).collect()),
        other => other.clone(),
    }
}

fn check_dim(w: &mut Walker, d: u64, section: &str) -> Option<usize> {
    if d == 1 || d == 2 {
        Some(d as usize)
    } else {
        w.err(format!("{section}.dim must be 1 or 2, got {d}"));
        None
    }
}

/// Parses and validates a config, collecting every error.
pub fn parse_config(text: &str) -> Result<Config, ConfigErrors> {
    let root: Table =
        toml::from_str(text).map_err(|e| ConfigErrors(vec![e.to_string().trim().to_string()]))?;
    let mut w = Walker::default();
    w.check_keys(&root, "top level", TOP_KEYS);
    let seed = w.uint(&root, "top level", "seed").unwrap_or(0);
    let dim = w
        .uint(&root, "top level", "dim")
        .and_then(|d| check_dim(&mut w, d, "top level"))
        .unwrap_or(1);
    let grid_defaults = w.table(&root, "top level", "grid").cloned();
    let family_defaults = w.table(&root, "top level", "family").cloned();
    let instances: Vec<Table> = match root.get("instance") {
        None => Vec::new(),
        Some(Value::Array(a)) => a
            .iter()
            .filter_map(|v| match v {
                Value::Table(t) => Some(t.clone()),
                _ => {
                    w.err("`instance` entries must be tables ([[instance]])".into());
                    None
                }
            })
            .collect(),
        Some(_) => {
            w.err("`instance` must be an array of tables ([[instance]])".into());
            Vec::new()
        }
    };

    let mut config = Config::default();
    let mut ids = BTreeSet::new();
    for (i, t) in instances.iter().enumerate() {
        let sec = format!("instance.{i}");
        w.check_keys(t, &sec, INSTANCE_KEYS);
        let id = w.string(t, &sec, "id").map(str::to_string);
        if let Some(id) = &id {
            if !ids.insert(id.clone()) {
                w.err(format!("duplicate instance id `{id}`"));
            }
        }
        let theorem = w.string(t, &sec, "theorem").and_then(|s| {
            let th = Theorem::parse(s);
            if th.is_none() {
                let all: Vec<&str> = Theorem::ALL.iter().map(|t| t.label()).collect();
                w.err(format!(
                    "unknown {sec}.theorem `{s}` (expected one of {})",
                    all.join(", ")
                ));
            }
            th
        });
        let dim = match w.uint(t, &sec, "dim") {
            Some(d) => check_dim(&mut w, d, &sec),
            None => Some(dim),
        };
        let seed = w.uint(t, &sec, "seed").unwrap_or(seed);

        let mut grid = GridPolicy::for_dim(dim.unwrap_or(1));
        if let Some(g) = &grid_defaults {
            w.apply_grid(&mut grid, g, "grid");
        }
        if let Some(g) = w.table(t, &sec, "grid") {
            w.apply_grid(&mut grid, g, &format!("{sec}.grid"));
        }
        let mut family = FamilySpec::for_dim(dim.unwrap_or(1));
        if let Some(f) = &family_defaults {
            w.apply_family(&mut family, f, "family");
        }
        if let Some(f) = w.table(t, &sec, "family") {
            w.apply_family(&mut family, f, &format!("{sec}.family"));
        }

        let measure = match w.table(t, &sec, "measure") {
            Some(m) => {
                let mut m = m.clone();
                m.entry("scale").or_insert(Value::Float(1.0));
                w.tagged::<MeasureSpec>(&m, &format!("{sec}.measure"), measure_fields, &["scale"])
            }
            None => {
                w.err(format!("missing required section [{sec}.measure]"));
                None
            }
        };
        let weight = match w.table(t, &sec, "weight") {
            Some(x) => w.tagged::<WeightKind>(x, &format!("{sec}.weight"), weight_fields, &[]),
            None => {
                w.err(format!("missing required section [{sec}.weight]"));
                None
            }
        };
        let params = match w.table(t, &sec, "params") {
            Some(p) => w.params(p, &format!("{sec}.params"), theorem),
            None => {
                w.err(format!("missing required section [{sec}.params]"));
                None
            }
        };
        let product = w
            .table(t, &sec, "product")
            .map(|p| w.product(p, &format!("{sec}.product")));

        if let (Some(id), Some(theorem), Some(dim), Some(measure), Some(weight), Some(params)) =
            (id, theorem, dim, measure, weight, params)
        {
            let inst = InstanceConfig {
                id,
                theorem,
                dim,
                measure,
                weight,
                params,
                grid,
                family,
                seed,
            };
            // building catches dimension mismatches and invalid masses or tables
            if let Err(e) = inst.build_measure() {
                w.err(format!("[{sec}.measure]: {e}"));
            }
            if let Err(e) = inst.build_weight() {
                w.err(format!("[{sec}.weight]: {e}"));
            }
            config.sweep.instances.push(inst);
            config.products.push(product.flatten());
        }
    }
    if w.errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(w.errors))
    }
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn value(v: &Value) -> String {
    match v {
        Value::Float(x) => float(*x),
        Value::Array(a) => {
            let items: Vec<String> = a.iter().map(value).collect();
            format!("[{}]", items.join(", "))
        }
        other => other.to_string(),
    }
}

fn floats(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|x| float(*x)).collect();
    format!("[{}]", items.join(", "))
}

/// Writes a serialized tagged enum with `kind` first, then the fields in key order.
fn tagged_section(out: &mut String, header: &str, v: Value) {
    out.push_str(&format!("\n[{header}]\n"));
    let Value::Table(t) = v else {
        unreachable!("measure and weight kinds serialize to tables")
    };
    if let Some(k) = t.get("kind") {
        out.push_str(&format!("kind = {}\n", value(k)));
    }
    for (k, v) in t.iter().filter(|(k, _)| k.as_str() != "kind") {
        out.push_str(&format!("{k} = {}\n", value(v)));
    }
}

/// The config with every instance fully expanded.
pub fn emit_config(config: &Config) -> String {
    let mut out = String::new();
    for (i, inst) in config.sweep.instances.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("[[instance]]\n");
        out.push_str(&format!("id = {}\n", Value::String(inst.id.clone())));
        out.push_str(&format!("theorem = \"{}\"\n", inst.theorem.label()));
        out.push_str(&format!("dim = {}\n", inst.dim));
        out.push_str(&format!("seed = {}\n", inst.seed));
        tagged_section(
            &mut out,
            "instance.measure",
            Value::try_from(&inst.measure).expect("measure specs serialize"),
        );
        tagged_section(
            &mut out,
            "instance.weight",
            Value::try_from(&inst.weight).expect("weight kinds serialize"),
        );
        let p = &inst.params;
        out.push_str("\n[instance.params]\n");
        out.push_str(&format!("p = {}\nq = {}\n", float(p.p), float(p.q)));
        if let Some(t) = p.t {
            out.push_str(&format!("t = {}\n", float(t)));
        }
        out.push_str(&format!("alpha = {}\n", float(p.alpha)));
        if let Some(b) = p.beta {
            out.push_str(&format!("beta = {}\n", float(b)));
        }
        let g = &inst.grid;
        out.push_str("\n[instance.grid]\n");
        for (k, x) in [
            ("step", g.step),
            ("radius", g.radius),
            ("fine_step", g.fine_step),
            ("r_sup", g.r_sup),
            ("integral_step", g.integral_step),
            ("integral_radius", g.integral_radius),
        ] {
            out.push_str(&format!("{k} = {}\n", float(x)));
        }
        out.push_str(&format!("shell_radii = {}\n", floats(&g.shell_radii)));
        out.push_str(&format!(
            "decay_step = {}\neps_rel = {}\n",
            float(g.decay_step),
            float(g.eps_rel)
        ));
        let f = &inst.family;
        out.push_str("\n[instance.family]\n");
        out.push_str(&format!(
            "kernel_box = {}\nrademacher_radius = {}\nrademacher_draws = {}\n",
            f.kernel_box,
            float(f.rademacher_radius),
            f.rademacher_draws
        ));
        if let Some(Some(prod)) = config.products.get(i) {
            out.push_str("\n[instance.product]\n");
            let exps: Vec<String> = prod
                .exponents
                .iter()
                .map(|(p, q)| floats(&[*p, *q]))
                .collect();
            let alphas: Vec<String> = prod.alphas.iter().map(|a| floats(a)).collect();
            out.push_str(&format!("exponents = [{}]\n", exps.join(", ")));
            out.push_str(&format!("alphas = [{}]\n", alphas.join(", ")));
        }
    }
    out
}

impl Config {
    pub fn from_sweep(sweep: SweepConfig) -> Self {
        let products = vec![None; sweep.instances.len()];
        Config { sweep, products }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[instance]]
id = "delta"
theorem = "main1-sup"

[instance.measure]
kind = "dirac"
location = [0, 0]
mass = 1

[instance.weight]
kind = "constant"
c = 1

[instance.params]
p = 1
q = 1
t = 1
alpha = 1
beta = 1
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        let inst = &c.sweep.instances[0];
        assert_eq!(inst.dim, 1);
        assert_eq!(inst.grid, GridPolicy::for_dim(1));
        assert_eq!(inst.family, FamilySpec::for_dim(1));
        assert_eq!(inst.params.t, Some(1.0));
        assert_eq!(inst.measure.scale, 1.0);
        assert_eq!(c.products, vec![None]);
    }

    #[test]
    fn emission_round_trips() {
        let c = parse_config(MINIMAL).unwrap();
        let text = emit_config(&c);
        let again = parse_config(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(emit_config(&again), text);
    }

    #[test]
    fn empty_config_is_an_empty_sweep() {
        let c = parse_config("").unwrap();
        assert!(c.sweep.instances.is_empty());
        assert_eq!(emit_config(&c), "");
    }

    #[test]
    fn all_errors_are_collected() {
        let text = MINIMAL
            .replace(
                "theorem = \"main1-sup\"",
                "theorem = \"main1-sup\"\ncolour = 3",
            )
            .replace("t = 1", "t = -1")
            .replace("mass = 1", "mass = 1\nwidth = 2");
        let errs = parse_config(&text).unwrap_err().0;
        assert_eq!(errs.len(), 3, "{errs:?}");
        assert!(errs
            .iter()
            .any(|e| e.contains("`colour`") && e.contains("[instance.0]")));
        assert!(errs
            .iter()
            .any(|e| e.contains("`width`") && e.contains("[instance.0.measure]")));
        assert!(errs.iter().any(|e| e.contains("BerezinParams.t")));
    }

    #[test]
    fn regime_mismatch_and_missing_fields() {
        let text = MINIMAL.replace("p = 1\n", "p = 2\n");
        let errs = parse_config(&text).unwrap_err().0;
        assert!(
            errs.iter().any(|e| e.contains("regime mismatch")),
            "{errs:?}"
        );
        let text = MINIMAL.replace("alpha = 1\n", "");
        let errs = parse_config(&text).unwrap_err().0;
        assert_eq!(
            errs,
            vec!["missing required field instance.0.params.alpha".to_string()]
        );
    }
}
