//! The operations behind the `normgeo` binary, independent of argument
//! parsing so they can be driven from tests and examples.
//!
//! Every command reads a JSON document, returns a [`RunReport`], and maps
//! failures onto a fixed set of exit codes (see [`ErrorKind`]).

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::GeomError;
use crate::geodesy::quadrature::NODES_PER_UNIT;
use crate::geodesy::{
    defect, fisher_distance_leaf, fisher_geodesic_ode, killing_distance, normalize_transversal,
    solve_geodesic_bvp, uniform_grid, BvpOptions, TransversalGeodesic,
};
use crate::killing::{
    dphi, generator_for_velocity, killing_inner, killing_inner_matrix, phi, phi_inv,
    symmetric_geodesic,
};
use crate::manifold::{fisher_inner, GaussianPoint, TangentVector};
use crate::sampling::Sampler;
use crate::spd::{gen_eigvals, spd_sqrt, sym_exp, SpdMatrix, SymMatrix};
use crate::verify::{run_suite, Level, SuiteConfig, ToleranceProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Verification,
    Parse,
    Domain,
    NoConvergence,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Verification => 1,
            ErrorKind::Parse => 2,
            ErrorKind::Domain => 3,
            ErrorKind::NoConvergence => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct CommandError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CommandError {
    pub fn parse(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Parse,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Domain,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

/// Errors raised while computing, as opposed to while reading input.
impl From<GeomError> for CommandError {
    fn from(e: GeomError) -> Self {
        let kind = match e {
            GeomError::NoConvergence { .. } => ErrorKind::NoConvergence,
            _ => ErrorKind::Domain,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

pub type CommandResult<T> = std::result::Result<T, CommandError>;

fn input_error(what: &str, e: GeomError) -> CommandError {
    CommandError::parse(format!("{what}: {e}"))
}

fn matrix_from_rows(what: &str, rows: &[Vec<f64>]) -> CommandResult<DMatrix<f64>> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(input_error(
            what,
            GeomError::DimensionMismatch {
                expected: n,
                found: bad.len(),
            },
        ));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// A normal distribution as written in input documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpec {
    pub sigma: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
}

impl PointSpec {
    pub fn from_point(p: &GaussianPoint) -> Self {
        Self {
            sigma: rows_of(p.sigma().as_matrix()),
            mu: p.mu().iter().copied().collect(),
        }
    }

    pub fn to_point(&self, what: &str) -> CommandResult<GaussianPoint> {
        let m = matrix_from_rows(what, &self.sigma)?;
        let sym = SymMatrix::new(m).map_err(|e| input_error(what, e))?;
        let sigma = SpdMatrix::new(sym).map_err(|e| input_error(what, e))?;
        GaussianPoint::new(sigma, DVector::from_vec(self.mu.clone()))
            .map_err(|e| input_error(what, e))
    }
}

/// A tangent vector `(X, v)` as written in input documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentSpec {
    pub x: Vec<Vec<f64>>,
    pub v: Vec<f64>,
}

impl TangentSpec {
    pub fn from_tangent(t: &TangentVector) -> Self {
        Self {
            x: rows_of(t.x().as_matrix()),
            v: t.v().iter().copied().collect(),
        }
    }

    pub fn to_tangent(&self, what: &str, n: usize) -> CommandResult<TangentVector> {
        let m = matrix_from_rows(what, &self.x)?;
        let x = SymMatrix::new(m).map_err(|e| input_error(what, e))?;
        let t = TangentVector::new(x, DVector::from_vec(self.v.clone()))
            .map_err(|e| input_error(what, e))?;
        if t.dim() != n {
            return Err(input_error(
                what,
                GeomError::DimensionMismatch {
                    expected: n,
                    found: t.dim(),
                },
            ));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricInput {
    pub point: PointSpec,
    pub t1: TangentSpec,
    pub t2: TangentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInput {
    pub p1: PointSpec,
    pub p2: PointSpec,
}

/// Initial data for `geodesic` and `defect`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveInput {
    pub p0: PointSpec,
    pub v0: TangentSpec,
}

pub fn parse_input<T: for<'de> Deserialize<'de>>(text: &str) -> CommandResult<T> {
    serde_json::from_str(text)
        .map_err(|e| CommandError::parse(format!("invalid input document: {e}")))
}

/// A numeric table; `None` cells are written empty in CSV and `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Writes a header row and one line per row, numbers with 17
    /// significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(
                row.iter()
                    .map(|c| c.map(|x| format!("{x:.16e}")).unwrap_or_default()),
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    /// Whether the command's own acceptance condition held; only `verify`
    /// can report `false`.
    pub passed: bool,
    pub inputs: Value,
    pub outputs: BTreeMap<String, Value>,
    pub diagnostics: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

impl RunReport {
    fn new(command: &str, ctx: &Context, inputs: Value) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("seed".into(), json!(ctx.seed));
        diagnostics.insert("tolerance_profile".into(), json!(ctx.profile));
        Self {
            command: command.into(),
            passed: true,
            inputs,
            outputs: BTreeMap::new(),
            diagnostics,
            table: None,
        }
    }

    fn output(&mut self, key: &str, value: impl Serialize) {
        self.outputs.insert(key.into(), json!(value));
    }

    fn diagnostic(&mut self, key: &str, value: impl Serialize) {
        self.diagnostics.insert(key.into(), json!(value));
    }

    fn warn(&mut self, message: String) {
        let entry = self
            .diagnostics
            .entry("warnings".into())
            .or_insert_with(|| json!([]));
        if let Value::Array(list) = entry {
            list.push(Value::String(message));
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Options shared by every command.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    pub seed: u64,
    pub profile: ToleranceProfile,
}

impl Default for Context {
    fn default() -> Self {
        Self {
            seed: 0,
            profile: ToleranceProfile::Default,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    #[default]
    Fisher,
    Killing,
}

pub fn metric(
    input: &MetricInput,
    ctx: &Context,
    selected: MetricKind,
) -> CommandResult<RunReport> {
    let p = input.point.to_point("point")?;
    let t1 = input.t1.to_tangent("t1", p.dim())?;
    let t2 = input.t2.to_tangent("t2", p.dim())?;
    let fisher = fisher_inner(&p, &t1, &t2)?;
    let killing = killing_inner(&p, &t1, &t2)?;
    let n = p.dim() as f64;
    let si = p.sigma_inv();
    let trace_term =
        (si * t1.x().as_matrix()).trace() * (si * t2.x().as_matrix()).trace() / (2.0 * (n + 1.0));

    let mut report = RunReport::new("metric", ctx, json!(input));
    report.output("fisher", fisher);
    report.output("killing", killing);
    report.output("difference", fisher - killing);
    report.output("trace_term", trace_term);
    report.output("metric", selected);
    report.output(
        "value",
        match selected {
            MetricKind::Fisher => fisher,
            MetricKind::Killing => killing,
        },
    );
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMethod {
    #[default]
    Leaf,
    Bvp,
    Killing,
}

pub fn distance(
    input: &PairInput,
    ctx: &Context,
    method: DistanceMethod,
) -> CommandResult<RunReport> {
    let p1 = input.p1.to_point("p1")?;
    let p2 = input.p2.to_point("p2")?;
    if p1.dim() != p2.dim() {
        return Err(input_error(
            "p2",
            GeomError::DimensionMismatch {
                expected: p1.dim(),
                found: p2.dim(),
            },
        ));
    }
    let mut report = RunReport::new("distance", ctx, json!(input));
    report.output("method", method);
    let d = match method {
        DistanceMethod::Leaf => {
            let d = fisher_distance_leaf(&p1, &p2)?;
            report.diagnostic(
                "generalized_eigenvalues",
                gen_eigvals(p2.sigma(), p1.sigma())?,
            );
            d
        }
        DistanceMethod::Killing => {
            let (q1, q2) = (phi(&p1)?, phi(&p2)?);
            report.diagnostic(
                "generalized_eigenvalues",
                gen_eigvals(q2.as_spd(), q1.as_spd())?,
            );
            killing_distance(&q1, &q2)?
        }
        DistanceMethod::Bvp => {
            let opts = BvpOptions {
                seed: ctx.seed,
                ..BvpOptions::default()
            };
            let sol = solve_geodesic_bvp(&p1, &p2, &opts)?;
            report.diagnostic("iterations", sol.iterations);
            report.diagnostic("restarts", sol.restarts);
            report.diagnostic("residual", sol.residual);
            report.output("initial_velocity", TangentSpec::from_tangent(&sol.v0));
            sol.distance
        }
    };
    report.output("distance", d);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicOptions {
    pub t_end: f64,
    pub steps: usize,
    pub metric: MetricKind,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            steps: 1000,
            metric: MetricKind::Fisher,
        }
    }
}

fn curve_columns(n: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for i in 0..n {
        for j in i..n {
            cols.push(format!("sigma_{i}{j}"));
        }
    }
    cols.extend((0..n).map(|i| format!("mu_{i}")));
    cols.push("energy".into());
    cols
}

fn curve_row(t: f64, p: &GaussianPoint, energy: f64) -> Vec<Option<f64>> {
    let n = p.dim();
    let s = p.sigma().as_matrix();
    let mut row = vec![Some(t)];
    for i in 0..n {
        for j in i..n {
            row.push(Some(s[(i, j)]));
        }
    }
    row.extend(p.mu().iter().map(|&m| Some(m)));
    row.push(Some(energy));
    row
}

/// Samples the geodesic with initial data `(p0, v0)` for the chosen metric.
/// The energy column is the squared speed in that metric.
pub fn geodesic(
    input: &CurveInput,
    ctx: &Context,
    opts: GeodesicOptions,
) -> CommandResult<RunReport> {
    let p0 = input.p0.to_point("p0")?;
    let v0 = input.v0.to_tangent("v0", p0.dim())?;
    if !(opts.t_end > 0.0 && opts.t_end.is_finite()) {
        return Err(CommandError::domain(format!(
            "t-end must be positive, got {}",
            opts.t_end
        )));
    }
    let mut table = Table::new(curve_columns(p0.dim()));
    match opts.metric {
        MetricKind::Fisher => {
            let curve = fisher_geodesic_ode(&p0, &v0, opts.t_end, opts.steps)?;
            let vels = curve.velocities().expect("integrator records velocities");
            for ((t, p), v) in curve.params().iter().zip(curve.points()).zip(vels) {
                table.push(curve_row(*t, p, fisher_inner(p, v, v)?));
            }
        }
        MetricKind::Killing => {
            if opts.steps == 0 {
                return Err(CommandError::domain("steps must be positive"));
            }
            let q0 = phi(&p0)?;
            let x0 = generator_for_velocity(&q0, &dphi(&p0, &v0)?)?;
            let r = spd_sqrt(q0.as_spd())?;
            let r = r.as_matrix();
            for t in uniform_grid(0.0, opts.t_end, opts.steps + 1) {
                let q = symmetric_geodesic(&q0, &x0, t)?;
                let e = sym_exp(&x0.as_sym().scale(2.0 * t))?;
                let vel = SymMatrix::new(r * x0.as_matrix() * e.as_matrix() * r * 2.0)?;
                let energy = killing_inner_matrix(&q, &vel, &vel)?;
                table.push(curve_row(t, &phi_inv(&q)?, energy));
            }
        }
    }

    let energies: Vec<f64> = table
        .rows
        .iter()
        .map(|r| r.last().copied().flatten().unwrap_or(f64::NAN))
        .collect();
    let e0 = energies[0];
    let drift = energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs().max(1.0);
    let last = table.rows.last().expect("at least two rows").clone();

    let mut report = RunReport::new("geodesic", ctx, json!(input));
    report.output("metric", opts.metric);
    report.output("t_end", opts.t_end);
    report.output("steps", opts.steps);
    report.output("initial_energy", e0);
    report.output("energy_drift", drift);
    report.output("endpoint", last);
    report.table = Some(table);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectOptions {
    pub t_max: f64,
}

impl Default for DefectOptions {
    fn default() -> Self {
        Self {
            t_max: crate::geodesy::DEFAULT_T_MAX,
        }
    }
}

/// The defect table of the Killing geodesic with leaf-orthogonal initial
/// data, measured with the Fisher connection.
pub fn defect_table(
    input: &CurveInput,
    ctx: &Context,
    opts: DefectOptions,
) -> CommandResult<RunReport> {
    let p0 = input.p0.to_point("p0")?;
    let v0 = input.v0.to_tangent("v0", p0.dim())?;
    if !(opts.t_max > 0.0 && opts.t_max.is_finite()) {
        return Err(CommandError::domain(format!(
            "t-max must be positive, got {}",
            opts.t_max
        )));
    }
    let (g, rescale) = normalize_transversal(&p0, &v0)?;
    let curve = TransversalGeodesic::new(&p0, &v0)?;
    let rep = defect(&curve, opts.t_max, NODES_PER_UNIT)?;
    let refs = rep
        .closed_form_reference
        .clone()
        .expect("transversal curves carry a reference");

    let mut table = Table::new(
        [
            "t",
            "integrand",
            "partial_integral",
            "defect_estimate",
            "analytic_defect",
        ]
        .map(String::from)
        .to_vec(),
    );
    for (k, &t) in rep.t_values.iter().enumerate() {
        table.push(vec![
            Some(t),
            Some(rep.integrands[k]),
            Some(rep.partial_integrals[k]),
            Some(rep.defect_estimates[k]),
            Some(refs[k] / t),
        ]);
    }

    let mut report = RunReport::new("defect", ctx, json!(input));
    report.output("t_max", opts.t_max);
    report.output("speed", curve.speed());
    report.output("defect_at_t_max", rep.last_estimate());
    report.output(
        "analytic_defect_at_t_max",
        refs.last().copied().unwrap_or(f64::NAN) / opts.t_max,
    );
    report.output("max_reference_error", rep.max_reference_error());
    report.diagnostic("normalizing_a", rows_of(g.a()));
    report.diagnostic("normalizing_b", g.b().iter().copied().collect::<Vec<_>>());
    report.diagnostic("rescale", rescale);
    report.table = Some(table);
    Ok(report)
}

/// Runs the invariant suite. The report's `passed` flag is the conjunction
/// of all checks.
pub fn verify(ctx: &Context, level: Level, tolerance_scale: f64) -> RunReport {
    let config = SuiteConfig {
        level,
        seed: ctx.seed,
        profile: ctx.profile,
        tolerance_scale,
    };
    let results = run_suite(&config);
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.name.as_str())
        .collect();
    let mut report = RunReport::new("verify", ctx, json!({ "level": level }));
    report.passed = failed.is_empty();
    report.output("checks", &results);
    report.output("failed", &failed);
    report.output("passed_count", results.len() - failed.len());
    report.output("total", results.len());
    if tolerance_scale != 1.0 {
        report.diagnostic("tolerance_scale", tolerance_scale);
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairFamily {
    /// Arbitrary initial direction.
    #[default]
    Generic,
    /// Pure covariance direction; both points share a mean.
    Leaf,
    /// Pure mean direction.
    Transversal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    pub dim: usize,
    pub count: usize,
    /// Killing distances of the sampled pairs, drawn uniformly.
    pub separation: (f64, f64),
    pub family: PairFamily,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            dim: 2,
            count: 20,
            separation: (0.1, 2.0),
            family: PairFamily::Generic,
        }
    }
}

pub const MAX_COMPARE_DIM: usize = 3;

struct ComparePair {
    p1: GaussianPoint,
    p2: GaussianPoint,
    separation: f64,
}

fn sample_pair(s: &mut Sampler, opts: &CompareOptions) -> CommandResult<ComparePair> {
    let n = opts.dim;
    let p1 = s.point(n);
    let dir = match opts.family {
        PairFamily::Generic => s.tangent(n),
        PairFamily::Leaf => TangentVector::sigma_dir(s.sym(n)),
        PairFamily::Transversal => TangentVector::mean_dir(s.gaussian_vector(n)),
    };
    let (lo, hi) = opts.separation;
    let separation = if hi > lo { s.uniform(lo, hi) } else { lo };
    let q1 = phi(&p1)?;
    let vel = dphi(&p1, &dir)?;
    let len = killing_inner_matrix(&q1, &vel, &vel)?.sqrt();
    let x0 = generator_for_velocity(&q1, &vel.scale(separation / len))?;
    let p2 = phi_inv(&symmetric_geodesic(&q1, &x0, 1.0)?)?;
    Ok(ComparePair { p1, p2, separation })
}

struct CompareRow {
    fisher: Option<f64>,
    killing: f64,
    leaf: Option<f64>,
    iterations: usize,
}

fn compare_pair(pair: &ComparePair, seed: u64, family: PairFamily) -> CommandResult<CompareRow> {
    let killing = killing_distance(&phi(&pair.p1)?, &phi(&pair.p2)?)?;
    let opts = BvpOptions {
        seed,
        ..BvpOptions::default()
    };
    let (fisher, iterations) = match solve_geodesic_bvp(&pair.p1, &pair.p2, &opts) {
        Ok(sol) => (Some(sol.distance), sol.iterations),
        Err(GeomError::NoConvergence { iterations, .. }) => (None, iterations),
        Err(e) => return Err(e.into()),
    };
    let leaf = match family {
        PairFamily::Leaf => Some(fisher_distance_leaf(&pair.p1, &pair.p2)?),
        _ => None,
    };
    Ok(CompareRow {
        fisher,
        killing,
        leaf,
        iterations,
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Fisher (shooting) against Killing distances on random pairs whose Killing
/// separation is prescribed. Pairs are solved on worker threads and reported
/// in sampling order; a pair the solver cannot connect is flagged, not fatal.
pub fn compare(ctx: &Context, opts: CompareOptions) -> CommandResult<RunReport> {
    if opts.dim == 0 || opts.dim > MAX_COMPARE_DIM {
        return Err(CommandError::domain(format!(
            "dim must be in 1..={MAX_COMPARE_DIM}, got {}",
            opts.dim
        )));
    }
    let (lo, hi) = opts.separation;
    if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
        return Err(CommandError::domain(format!(
            "invalid separation range {lo}..{hi}"
        )));
    }
    let mut sampler = Sampler::new(ctx.seed);
    let pairs = (0..opts.count)
        .map(|_| sample_pair(&mut sampler, &opts))
        .collect::<CommandResult<Vec<_>>>()?;

    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(pairs.len().max(1));
    let mut rows: Vec<Option<CommandResult<CompareRow>>> = (0..pairs.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (w, chunk) in rows
            .chunks_mut(pairs.len().div_ceil(workers).max(1))
            .enumerate()
        {
            let pairs = &pairs;
            let base = w * pairs.len().div_ceil(workers).max(1);
            scope.spawn(move || {
                for (k, slot) in chunk.iter_mut().enumerate() {
                    let i = base + k;
                    *slot = Some(compare_pair(
                        &pairs[i],
                        ctx.seed.wrapping_add(i as u64),
                        opts.family,
                    ));
                }
            });
        }
    });

    let mut table = Table::new(
        [
            "index",
            "separation",
            "fisher_bvp",
            "killing",
            "ratio",
            "abs_error",
            "leaf_closed_form",
            "converged",
        ]
        .map(String::from)
        .to_vec(),
    );
    let mut report = RunReport::new(
        "compare",
        ctx,
        json!({
            "dim": opts.dim,
            "count": opts.count,
            "separation_range": [lo, hi],
            "family": opts.family,
        }),
    );
    let mut ratios = Vec::new();
    let mut unconverged = 0usize;
    let mut total_iterations = 0usize;
    for (i, (pair, row)) in pairs.iter().zip(rows).enumerate() {
        let row = row.expect("every slot filled")?;
        total_iterations += row.iterations;
        let ratio = row
            .fisher
            .filter(|_| row.killing > 0.0)
            .map(|f| f / row.killing);
        if let Some(r) = ratio {
            ratios.push(r);
        }
        if row.fisher.is_none() {
            unconverged += 1;
            report.warn(format!("pair {i}: shooting did not converge"));
        }
        table.push(vec![
            Some(i as f64),
            Some(pair.separation),
            row.fisher,
            Some(row.killing),
            ratio,
            row.fisher.map(|f| (f - row.killing).abs()),
            row.leaf,
            Some(if row.fisher.is_some() { 1.0 } else { 0.0 }),
        ]);
    }
    ratios.sort_by(f64::total_cmp);
    if !ratios.is_empty() {
        let mut q = BTreeMap::new();
        for (name, level) in [
            ("min", 0.0),
            ("q25", 0.25),
            ("median", 0.5),
            ("q75", 0.75),
            ("max", 1.0),
        ] {
            q.insert(name, quantile(&ratios, level));
        }
        report.output("ratio_quantiles", q);
    }
    report.output("pairs", pairs.len());
    report.output("unconverged", unconverged);
    report.diagnostic("iterations", total_iterations);
    report.table = Some(table);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard_metric_input() -> MetricInput {
        MetricInput {
            point: PointSpec {
                sigma: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                mu: vec![0.0, 0.0],
            },
            t1: TangentSpec {
                x: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                v: vec![0.0, 0.0],
            },
            t2: TangentSpec {
                x: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                v: vec![0.0, 0.0],
            },
        }
    }

    #[test]
    fn metric_of_identity_direction() {
        let r = metric(
            &standard_metric_input(),
            &Context::default(),
            MetricKind::Fisher,
        )
        .unwrap();
        assert_eq!(r.outputs["fisher"], json!(1.0));
        let k = r.outputs["killing"].as_f64().unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-12);
        let diff = r.outputs["difference"].as_f64().unwrap();
        let term = r.outputs["trace_term"].as_f64().unwrap();
        assert!((diff - term).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_are_classified() {
        let mut input = standard_metric_input();
        input.point.sigma = vec![vec![1.0, 0.5], vec![0.0, 1.0]];
        let e = metric(&input, &Context::default(), MetricKind::Fisher).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.message.contains("point"));

        let mut input = standard_metric_input();
        input.point.sigma = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert_eq!(
            metric(&input, &Context::default(), MetricKind::Fisher)
                .unwrap_err()
                .exit_code(),
            2
        );

        let mut input = standard_metric_input();
        input.t2.v = vec![0.0];
        assert_eq!(
            metric(&input, &Context::default(), MetricKind::Fisher)
                .unwrap_err()
                .exit_code(),
            2
        );

        assert_eq!(
            parse_input::<PairInput>("{\"p1\": 3}")
                .unwrap_err()
                .exit_code(),
            2
        );
    }

    #[test]
    fn leaf_distance_with_unequal_means_is_a_domain_error() {
        let input = PairInput {
            p1: PointSpec {
                sigma: vec![vec![1.0]],
                mu: vec![0.0],
            },
            p2: PointSpec {
                sigma: vec![vec![2.0]],
                mu: vec![1.0],
            },
        };
        let e = distance(&input, &Context::default(), DistanceMethod::Leaf).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn table_csv_round_trips_values() {
        let mut t = Table::new(vec!["a".into(), "b".into()]);
        t.push(vec![Some(0.1 + 0.2), None]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        let (a, b) = line.split_once(',').unwrap();
        assert_eq!(a.parse::<f64>().unwrap(), 0.1 + 0.2);
        assert!(b.is_empty());
    }

    #[test]
    fn report_json_round_trips() {
        let r = metric(
            &standard_metric_input(),
            &Context::default(),
            MetricKind::Killing,
        )
        .unwrap();
        let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 0.5), 2.5);
        assert_eq!(quantile(&xs, 1.0), 4.0);
    }

    #[test]
    fn compare_leaf_pairs_match_closed_form() {
        let opts = CompareOptions {
            dim: 2,
            count: 3,
            separation: (0.2, 1.0),
            family: PairFamily::Leaf,
        };
        let r = compare(&Context::default(), opts).unwrap();
        for row in &r.table.as_ref().unwrap().rows {
            let (f, leaf) = (row[2].unwrap(), row[6].unwrap());
            assert!((f - leaf).abs() < 1e-4, "{f} vs {leaf}");
        }
    }
}
