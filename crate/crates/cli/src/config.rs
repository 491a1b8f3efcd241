//! Run configuration: one JSON document with the sections `grid`,
//! `potential`, `incidence`, `solver` and `output`.
//!
//! Unknown keys are rejected.  Angles are radians; any key may instead be
//! given with a `_deg` suffix, in degrees (numbers or arrays of numbers).
//! Tabulated potentials come from long-format CSV files with the header
//! `x,K,re,im`, one row per (x, K) node of a full rectangular table.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha1::{Digest, Sha1};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use tmscatter::potential::{Component, Table};
use tmscatter::scatter::{Route, ScanGrid};
use tmscatter::threed::{Direction, Grid3d};
use tmscatter::{Error, EvolveSettings, PotentialSpec, Result, C};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub grid: GridSection,
    pub potential: PotentialSection,
    #[serde(default)]
    pub incidence: IncidenceSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Wavenumbers; single-k commands use the first.
    pub k: Vec<f64>,
    pub n_osc: usize,
    pub n_ev: usize,
    pub p_max_over_k: f64,
    /// Disk grid for spatial potentials.
    pub n_radial: usize,
    pub n_azimuthal: usize,
    pub n_ev_radial: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = Grid3d::default();
        GridSection {
            k: vec![1.0],
            n_osc: 64,
            n_ev: 16,
            p_max_over_k: 4.0,
            n_radial: g.n_radial,
            n_azimuthal: g.n_azimuthal,
            n_ev_radial: g.n_ev_radial,
        }
    }
}

impl GridSection {
    pub fn scan(&self) -> ScanGrid {
        ScanGrid {
            n_osc: self.n_osc,
            n_ev: self.n_ev,
            p_max_over_k: self.p_max_over_k,
        }
    }

    pub fn disk(&self) -> Grid3d {
        Grid3d {
            n_radial: self.n_radial,
            n_azimuthal: self.n_azimuthal,
            p_max_over_k: self.p_max_over_k,
            n_ev_radial: self.n_ev_radial,
        }
    }

    pub fn first_k(&self) -> Result<f64> {
        self.k
            .first()
            .copied()
            .ok_or_else(|| Error::InvalidConfig("grid.k is empty".into()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default = "planar")]
    pub dim: usize,
    pub coupling: C,
    #[serde(default)]
    pub components: Vec<Component>,
    #[serde(default)]
    pub tables: Vec<Table>,
    /// CSV files, resolved relative to the configuration file.
    #[serde(default)]
    pub table_files: Vec<PathBuf>,
    #[serde(default)]
    pub window: Option<[f64; 2]>,
}

fn planar() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncidenceSection {
    /// Incidence angles; single-angle commands use the first.
    pub theta0: Vec<f64>,
    /// Azimuth of the incidence direction (spatial potentials).
    pub phi0: f64,
}

impl Default for IncidenceSection {
    fn default() -> Self {
        IncidenceSection {
            theta0: vec![0.0],
            phi0: 0.0,
        }
    }
}

impl IncidenceSection {
    pub fn first(&self) -> Result<f64> {
        self.theta0
            .first()
            .copied()
            .ok_or_else(|| Error::InvalidConfig("incidence.theta0 is empty".into()))
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.theta0
            .iter()
            .map(|&t| Direction::new(t, self.phi0))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub route: Route,
    pub evolve: EvolveSettings,
    /// Slice counts for compose-bench.
    pub slices: Vec<usize>,
    /// Support bound for certify and born-exact.
    pub alpha: f64,
    /// Direction of the one-sided support in the transverse plane (spatial).
    pub angle: f64,
    pub tol: f64,
    pub oracle_order: usize,
    pub oracle_cell: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            route: Route::Fundamental,
            evolve: EvolveSettings::default(),
            slices: vec![1, 2, 4, 8],
            alpha: 1.0,
            angle: 0.0,
            tol: 1e-7,
            oracle_order: 8,
            oracle_cell: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output file; standard output when absent.
    pub path: Option<PathBuf>,
    /// Scattering-angle mesh (planar).
    pub n_theta: usize,
    /// Direction mesh (spatial).
    pub n_polar: usize,
    pub n_azimuthal: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: None,
            n_theta: 64,
            n_polar: 8,
            n_azimuthal: 16,
        }
    }
}

/// A parsed configuration with its provenance.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Config,
    pub spec: PotentialSpec,
    /// Git-style object hash of the raw configuration bytes.
    pub hash: String,
    pub source: PathBuf,
}

/// `sha1("blob <len>\0" ++ bytes)`, the hash git assigns to the file.
pub fn git_hash(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Replace every `name_deg` key by `name` in radians.
pub fn convert_degrees(v: &mut Value, at: &str) -> Result<()> {
    match v {
        Value::Object(map) => {
            let keys: Vec<String> = map.keys().cloned().collect();
            let mut out = Map::new();
            for key in keys {
                let mut val = map.remove(&key).unwrap_or(Value::Null);
                let here = format!("{at}.{key}");
                convert_degrees(&mut val, &here)?;
                match key.strip_suffix("_deg") {
                    Some(base) if !base.is_empty() => {
                        if map.contains_key(base) || out.contains_key(base) {
                            return Err(Error::InvalidConfig(format!(
                                "{at}: both `{base}` and `{key}` given"
                            )));
                        }
                        out.insert(base.to_string(), to_radians(val, &here)?);
                    }
                    _ => {
                        if out.contains_key(&key) {
                            return Err(Error::InvalidConfig(format!(
                                "{at}: both `{key}` and `{key}_deg` given"
                            )));
                        }
                        out.insert(key, val);
                    }
                }
            }
            *map = out;
        }
        Value::Array(items) => {
            for (i, item) in items.iter_mut().enumerate() {
                convert_degrees(item, &format!("{at}[{i}]"))?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn to_radians(v: Value, at: &str) -> Result<Value> {
    let bad = || {
        Error::InvalidConfig(format!(
            "{at}: degrees must be a number or an array of numbers"
        ))
    };
    let conv = |x: &Value| {
        x.as_f64()
            .map(|d| Value::from(d * PI / 180.0))
            .ok_or_else(bad)
    };
    match &v {
        Value::Number(_) => conv(&v),
        Value::Array(items) => Ok(Value::Array(items.iter().map(conv).collect::<Result<_>>()?)),
        _ => Err(bad()),
    }
}

/// Scalars are accepted where lists are expected (`"k": 1.0`).
fn lift_scalars(v: &mut Value) {
    for (section, key) in [("grid", "k"), ("incidence", "theta0"), ("solver", "slices")] {
        if let Some(x) = v.get_mut(section).and_then(|s| s.get_mut(key)) {
            if x.is_number() {
                *x = Value::Array(vec![x.take()]);
            }
        }
    }
}

pub fn parse(text: &str, base: &Path) -> Result<(Config, PotentialSpec)> {
    let mut raw: Value = serde_json::from_str(text).map_err(|e| {
        Error::InvalidConfig(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    convert_degrees(&mut raw, "$")?;
    lift_scalars(&mut raw);
    let config: Config =
        serde_json::from_value(raw).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let spec = build_spec(&config.potential, base)?;
    validate(&config)?;
    Ok((config, spec))
}

pub fn load(path: &Path) -> Result<Loaded> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::InvalidConfig(format!("{} is not UTF-8", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (config, spec) = parse(text, base)?;
    Ok(Loaded {
        config,
        spec,
        hash: git_hash(&bytes),
        source: path.to_path_buf(),
    })
}

fn validate(c: &Config) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
    if c.grid.k.iter().any(|&k| !(k.is_finite() && k > 0.0)) {
        return bad("grid.k must be positive");
    }
    if c.output.n_theta == 0 || c.output.n_polar == 0 || c.output.n_azimuthal == 0 {
        return bad("output meshes need at least one point");
    }
    if c.solver.slices.contains(&0) {
        return bad("solver.slices must be positive");
    }
    if !(c.solver.tol > 0.0) || !(c.solver.oracle_cell > 0.0) || c.solver.oracle_order == 0 {
        return bad("solver.tol, solver.oracle_cell and solver.oracle_order must be positive");
    }
    Ok(())
}

fn build_spec(p: &PotentialSection, base: &Path) -> Result<PotentialSpec> {
    let mut tables = p.tables.clone();
    for f in &p.table_files {
        let path = if f.is_absolute() {
            f.clone()
        } else {
            base.join(f)
        };
        tables.push(read_table(&path)?);
    }
    let spec = PotentialSpec {
        dim: p.dim,
        coupling: p.coupling,
        components: p.components.clone(),
        tables,
        window: p.window,
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Deserialize)]
struct TableRow {
    x: f64,
    #[serde(rename = "K")]
    kk: f64,
    re: f64,
    im: f64,
}

/// Read a long-format `x,K,re,im` table covering every (x, K) pair once.
pub fn read_table(path: &Path) -> Result<Table> {
    let err = |m: String| Error::InvalidConfig(format!("{}: {m}", path.display()));
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let rows: Vec<TableRow> = rd
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(e.to_string()))?;
    let axis = |f: &dyn Fn(&TableRow) -> f64| {
        let mut v: Vec<f64> = rows.iter().map(f).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let xs = axis(&|r| r.x);
    let ks = axis(&|r| r.kk);
    if xs.len() * ks.len() != rows.len() {
        return Err(err(format!(
            "{} rows do not form a full {} x {} table",
            rows.len(),
            xs.len(),
            ks.len()
        )));
    }
    let mut values = vec![None; rows.len()];
    for r in &rows {
        let i = xs.partition_point(|&v| v < r.x);
        let j = ks.partition_point(|&v| v < r.kk);
        let slot = &mut values[i * ks.len() + j];
        if slot.is_some() {
            return Err(err(format!("duplicate node x = {}, K = {}", r.x, r.kk)));
        }
        *slot = Some(C::new(r.re, r.im));
    }
    Ok(Table {
        xs,
        ks,
        values: values.into_iter().map(|v| v.unwrap_or_default()).collect(),
    })
}

impl Loaded {
    /// Header comments: provenance, every resolved setting, library limits.
    pub fn header(&self, command: &str) -> Vec<String> {
        let mut out = vec![
            format!("tmscatter {command} {}", env!("CARGO_PKG_VERSION")),
            format!("config {} blob {}", self.source.display(), self.hash),
        ];
        let resolved = serde_json::json!({
            "grid": self.config.grid,
            "incidence": self.config.incidence,
            "solver": self.config.solver,
            "output": self.config.output,
        });
        if let Value::Object(m) = resolved {
            for (section, v) in m {
                out.push(format!(
                    "{section} {}",
                    serde_json::to_string(&v).unwrap_or_default()
                ));
            }
        }
        out.push(format!(
            "potential {}",
            serde_json::to_string(&self.spec).unwrap_or_default()
        ));
        out.push(format!(
            "limits grazing_margin {} condition_limit {} exp_limit {}",
            tmscatter::scatter::GRAZING_MARGIN,
            tmscatter::scatter::CONDITION_LIMIT,
            tmscatter::hamiltonian::EXP_LIMIT
        ));
        out
    }

    pub fn settings(&self) -> EvolveSettings {
        self.config.solver.evolve
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_are_converted_recursively() {
        let mut v: Value = serde_json::json!({"a": {"theta0_deg": [90.0, 180.0]}, "b_deg": 45.0});
        convert_degrees(&mut v, "$").unwrap();
        assert_eq!(v["a"]["theta0"][1].as_f64().unwrap(), PI);
        assert_eq!(v["b"].as_f64().unwrap(), PI / 4.0);
    }

    #[test]
    fn both_forms_are_rejected() {
        let mut v: Value = serde_json::json!({"theta0": 1.0, "theta0_deg": 2.0});
        assert!(convert_degrees(&mut v, "$").is_err());
        let mut v: Value = serde_json::json!({"x_deg": "ten"});
        assert!(convert_degrees(&mut v, "$").is_err());
    }

    #[test]
    fn git_blob_hash() {
        // `printf 'hello\n' | git hash-object --stdin`
        assert_eq!(
            git_hash(b"hello\n"),
            "ce013625030ba8dba906f756967f9e9ca394464a"
        );
    }
}
