//! Monte Carlo experiments over SNR or angular-spread grids, single solves,
//! and the stored-solution format consumed by `certify`.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::algorithm::{algorithm1, Algorithm1Diagnostics, Algorithm1Options};
use crate::beamformer::{optimal_sinr, output_sinr, plugin_beamformer, BeamWeights, UncertaintyModel};
use crate::certificate::{check_certificates, CertificateReport};
use crate::conic::{check_kkt, ConicSolution, KktReport, RelaxationProblem};
use crate::decomposition::numeric_rank;
use crate::error::{Error, Result};
use crate::hermitian::{format_complex, parse_matrix_lines, HermitianMatrix};
use crate::scenario::{
    power_to_db, scenario_from_config, simulate_snapshots, AngularDensity, KeyValues, Scenario, ScenarioSpec,
    SCATTER_RANK_TOL, SCENARIO_KEYS,
};

pub const DESK_TRIALS: usize = 20;
pub const FULL_TRIALS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Algorithm1,
    Plugin,
    Optimal,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Algorithm1 => "algorithm1",
            Method::Plugin => "plugin",
            Method::Optimal => "optimal",
        }
    }

    fn parse(s: &str) -> Option<Method> {
        match s {
            "algorithm1" => Some(Method::Algorithm1),
            "plugin" => Some(Method::Plugin),
            "optimal" => Some(Method::Optimal),
            _ => None,
        }
    }
}

/// What the grid varies.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    /// Signal power in dB over unit noise.
    Snr(Vec<f64>),
    /// Spread of the (Gaussian) desired-signal density, in degrees.
    Spread(Vec<f64>),
}

impl Sweep {
    pub fn kind(&self) -> &'static str {
        match self {
            Sweep::Snr(_) => "snr_db",
            Sweep::Spread(_) => "spread_deg",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Sweep::Snr(v) | Sweep::Spread(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub scenario: ScenarioSpec,
    pub sweep: Sweep,
    pub trials: usize,
    pub snapshots: usize,
    /// `γ = gamma_factor · ‖R̂‖`
    pub gamma_factor: f64,
    /// `ε = eps_factor · ‖R̂_s‖`
    pub eps_factor: f64,
    pub base_seed: u64,
    pub methods: Vec<Method>,
}

const EXPERIMENT_KEYS: &[&str] = &[
    "experiment",
    "sweep",
    "snr_grid",
    "spread_grid",
    "trials",
    "snapshots",
    "gamma_factor",
    "eps_factor",
    "base_seed",
    "methods",
];

pub const SNR_GRID: [f64; 7] = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];
pub const SPREAD_GRID: [f64; 9] = [0.15, 1.0, 2.0, 5.0, 9.0, 14.0, 20.0, 25.0, 30.0];

impl ExperimentConfig {
    fn with(id: &str, scenario: ScenarioSpec, sweep: Sweep) -> Self {
        ExperimentConfig {
            id: id.to_string(),
            scenario,
            sweep,
            trials: DESK_TRIALS,
            snapshots: 50,
            gamma_factor: 0.1,
            eps_factor: 0.3,
            base_seed: 1,
            methods: vec![Method::Algorithm1, Method::Plugin, Method::Optimal],
        }
    }

    /// Output SINR versus SNR, Gaussian desired source.
    pub fn example1() -> Self {
        let s = ScenarioSpec::reference(AngularDensity::Gaussian { center_deg: 30.0, spread_deg: 4.0 }, 0.0);
        ExperimentConfig::with("example1", s, Sweep::Snr(SNR_GRID.to_vec()))
    }

    /// Output SINR versus the spread (hence rank) of the desired source at 10 dB SNR.
    pub fn example2() -> Self {
        let s = ScenarioSpec::reference(AngularDensity::Gaussian { center_deg: 30.0, spread_deg: 4.0 }, 10.0);
        ExperimentConfig::with("example2", s, Sweep::Spread(SPREAD_GRID.to_vec()))
    }

    /// Output SINR versus SNR, truncated Laplacian desired source.
    pub fn example3() -> Self {
        let s = ScenarioSpec::reference(
            AngularDensity::TruncatedLaplacian { center_deg: 30.0, scale_rad: 0.1, support_deg: (15.0, 45.0) },
            0.0,
        );
        ExperimentConfig::with("example3", s, Sweep::Snr(SNR_GRID.to_vec()))
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "example1" => Some(Self::example1()),
            "example2" => Some(Self::example2()),
            "example3" => Some(Self::example3()),
            _ => None,
        }
    }

    /// Parses a `key = value` file. `experiment` names a preset used for any
    /// key left out; scenario keys override the preset's world.
    pub fn from_text(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text)?;
        for (k, line) in kv.keys() {
            if !SCENARIO_KEYS.contains(&k) && !EXPERIMENT_KEYS.contains(&k) {
                return Err(Error::parse(line, format!("unknown key '{k}'")));
            }
        }
        let mut cfg = match kv.get_str("experiment")? {
            None => Self::example1(),
            Some((line, name)) => Self::preset(name)
                .ok_or_else(|| Error::parse(line, format!("unknown experiment preset '{name}'")))?,
        };
        if SCENARIO_KEYS.iter().any(|k| !kv.all(k).is_empty()) {
            let mut base = scenario_from_config(&kv)?;
            if kv.all("signal").is_empty() {
                base.signal.density = cfg.scenario.signal.density.clone();
            }
            if kv.get::<f64>("snr_db")?.is_none() {
                base.signal.power_db = cfg.scenario.signal.power_db;
            }
            cfg.scenario = base;
        }
        if let Some((line, s)) = kv.get_str("sweep")? {
            cfg.sweep = match s {
                "snr" => Sweep::Snr(kv.get_list("snr_grid")?.unwrap_or_else(|| SNR_GRID.to_vec())),
                "spread" => Sweep::Spread(kv.get_list("spread_grid")?.unwrap_or_else(|| SPREAD_GRID.to_vec())),
                other => return Err(Error::parse(line, format!("unknown sweep '{other}'"))),
            };
        } else if let Some(g) = kv.get_list("snr_grid")? {
            cfg.sweep = Sweep::Snr(g);
        } else if let Some(g) = kv.get_list("spread_grid")? {
            cfg.sweep = Sweep::Spread(g);
        }
        if let Some(v) = kv.get("trials")? {
            cfg.trials = v;
        }
        if let Some(v) = kv.get("snapshots")? {
            cfg.snapshots = v;
        }
        if let Some(v) = kv.get("gamma_factor")? {
            cfg.gamma_factor = v;
        }
        if let Some(v) = kv.get("eps_factor")? {
            cfg.eps_factor = v;
        }
        if let Some(v) = kv.get("base_seed")? {
            cfg.base_seed = v;
        }
        if let Some((line, m)) = kv.get_str("methods")? {
            let mut methods = m
                .split(',')
                .map(|s| Method::parse(s.trim()).ok_or_else(|| Error::parse(line, format!("unknown method '{}'", s.trim()))))
                .collect::<Result<Vec<_>>>()?;
            methods.sort();
            methods.dedup();
            cfg.methods = methods;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::input("trials must be at least 1"));
        }
        if self.snapshots == 0 {
            return Err(Error::input("snapshots must be at least 1"));
        }
        if self.sweep.values().is_empty() {
            return Err(Error::input("grid is empty"));
        }
        if self.methods.is_empty() {
            return Err(Error::input("no methods selected"));
        }
        if !(self.gamma_factor > 0.0 && self.eps_factor > 0.0) {
            return Err(Error::input("gamma_factor and eps_factor must be positive"));
        }
        if let Sweep::Spread(_) = self.sweep {
            if !matches!(self.scenario.signal.density, AngularDensity::Gaussian { .. }) {
                return Err(Error::input("spread sweep needs a gaussian signal density"));
            }
        }
        Ok(())
    }

    /// Scenario for one grid point.
    pub fn scenario_at(&self, grid_value: f64) -> Result<Scenario> {
        let mut spec = self.scenario.clone();
        match self.sweep {
            Sweep::Snr(_) => spec.signal.power_db = grid_value,
            Sweep::Spread(_) => {
                if let AngularDensity::Gaussian { spread_deg, .. } = &mut spec.signal.density {
                    *spread_deg = grid_value;
                }
            }
        }
        spec.build()
    }

    pub fn seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub experiment: String,
    pub sweep: &'static str,
    pub grid_index: usize,
    pub grid_value: f64,
    /// Rank of the true signal covariance at this grid point.
    pub rs_rank: usize,
    pub trial: usize,
    pub method: Method,
    /// `None` when the method failed on this trial.
    pub output_sinr_db: Option<f64>,
    pub relaxation_value: Option<f64>,
    pub achieved_value: Option<f64>,
    pub rank_of_w: Option<usize>,
    pub certificate: Option<CertificateReport>,
    pub status: String,
    pub wall_time_ms: Option<f64>,
}

pub const CSV_HEADER: &str = "experiment,sweep,grid_index,grid_value,rs_rank,trial,method,status,output_sinr_db,\
relaxation_value,achieved_value,rank_of_w,rank_one_at_solver,thm42,cor43,cor44,constructed_optimal,wall_time_ms";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

impl ResultRecord {
    pub fn to_csv(&self) -> String {
        let cert = match &self.certificate {
            Some(c) => [c.rank_one_at_solver, c.thm42_holds, c.cor43_holds, c.cor44_holds, c.constructed_optimal]
                .map(|b| flag(b).to_string())
                .join(","),
            None => ",,,,".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.sweep,
            self.grid_index,
            self.grid_value,
            self.rs_rank,
            self.trial,
            self.method.name(),
            self.status,
            opt(&self.output_sinr_db),
            opt(&self.relaxation_value),
            opt(&self.achieved_value),
            opt(&self.rank_of_w),
            cert,
            opt(&self.wall_time_ms),
        )
    }
}

pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
}

impl ExperimentOutput {
    pub fn csv(&self) -> String {
        let mut s = String::with_capacity(self.records.len() * 120);
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.to_csv());
            s.push('\n');
        }
        s
    }

    /// Mean output SINR (dB) per grid point and method over successful
    /// trials, summed in trial order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut rows: Vec<SummaryRow> = Vec::new();
        for r in &self.records {
            let pos = rows.iter().position(|s| s.grid_index == r.grid_index && s.method == r.method);
            let row = match pos {
                Some(p) => &mut rows[p],
                None => {
                    rows.push(SummaryRow {
                        grid_index: r.grid_index,
                        grid_value: r.grid_value,
                        method: r.method,
                        trials: 0,
                        failures: 0,
                        sum: 0.0,
                    });
                    rows.last_mut().unwrap()
                }
            };
            match r.output_sinr_db {
                Some(v) => {
                    row.trials += 1;
                    row.sum += v;
                }
                None => row.failures += 1,
            }
        }
        rows.sort_by_key(|r| (r.grid_index, r.method));
        rows
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("grid_index,grid_value,method,trials,failures,mean_output_sinr_db\n");
        for r in self.summary() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.grid_index,
                r.grid_value,
                r.method.name(),
                r.trials,
                r.failures,
                r.mean().map(|m| m.to_string()).unwrap_or_default()
            );
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub grid_index: usize,
    pub grid_value: f64,
    pub method: Method,
    pub trials: usize,
    pub failures: usize,
    sum: f64,
}

impl SummaryRow {
    pub fn mean(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.sum / self.trials as f64)
    }
}

#[derive(Default)]
pub struct RunOptions {
    pub algorithm: Algorithm1Options,
    pub timing: bool,
}

/// Runs every (grid point, trial) cell in parallel; records come back in
/// (grid, trial, method) order. Every method in a cell sees the same `R̂`.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let grid = cfg.sweep.values();
    let scenarios: Vec<(Scenario, usize)> = grid
        .iter()
        .map(|&g| {
            let s = cfg.scenario_at(g)?;
            let rank = numeric_rank(&s.rs, SCATTER_RANK_TOL)?;
            Ok((s, rank))
        })
        .collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> =
        (0..grid.len()).flat_map(|g| (0..cfg.trials).map(move |t| (g, t))).collect();
    let per_cell: Vec<Vec<ResultRecord>> = cells
        .par_iter()
        .map(|&(gi, trial)| {
            let (scn, rs_rank) = &scenarios[gi];
            run_cell(cfg, opts, scn, *rs_rank, gi, grid[gi], trial)
        })
        .collect::<Result<_>>()?;
    Ok(ExperimentOutput { records: per_cell.into_iter().flatten().collect() })
}

fn run_cell(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    scn: &Scenario,
    rs_rank: usize,
    grid_index: usize,
    grid_value: f64,
    trial: usize,
) -> Result<Vec<ResultRecord>> {
    let r_hat = simulate_snapshots(scn, cfg.snapshots, cfg.seed(trial))?;
    let u = UncertaintyModel::new(cfg.gamma_factor * r_hat.frob_norm(), cfg.eps_factor * scn.rs_hat.frob_norm())?;
    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let start = Instant::now();
        let mut rec = ResultRecord {
            experiment: cfg.id.clone(),
            sweep: cfg.sweep.kind(),
            grid_index,
            grid_value,
            rs_rank,
            trial,
            method,
            output_sinr_db: None,
            relaxation_value: None,
            achieved_value: None,
            rank_of_w: None,
            certificate: None,
            status: "ok".into(),
            wall_time_ms: None,
        };
        let weights = match method {
            Method::Algorithm1 => algorithm1(&r_hat, &scn.rs_hat, u, &opts.algorithm).map(|(w, d)| {
                rec.relaxation_value = Some(d.relaxation_value);
                rec.achieved_value = Some(d.achieved_value);
                rec.rank_of_w = Some(d.rank_of_w);
                rec.certificate = Some(d.certificate);
                w
            }),
            Method::Plugin => plugin_beamformer(&r_hat, &scn.rs_hat, u.gamma),
            Method::Optimal => optimal_sinr(&scn.rs, &scn.r_in).map(|(_, w)| w),
        };
        match weights.and_then(|w| output_sinr(&w, &scn.rs, &scn.r_in)) {
            Ok(v) => rec.output_sinr_db = Some(power_to_db(v)),
            Err(Error::Solver(_)) => rec.status = "solver_failure".into(),
            Err(e) => return Err(e),
        }
        if opts.timing {
            rec.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        out.push(rec);
    }
    Ok(out)
}

/// Outcome of one robust solve on user-supplied matrices.
pub struct SingleReport {
    pub weights: BeamWeights,
    pub diagnostics: Algorithm1Diagnostics,
    pub uncertainty: UncertaintyModel,
    pub r_hat: HermitianMatrix,
    pub rs_hat: HermitianMatrix,
}

pub fn run_single(
    r_hat: HermitianMatrix,
    rs_hat: HermitianMatrix,
    gamma: f64,
    eps: f64,
    opts: &Algorithm1Options,
) -> Result<SingleReport> {
    if r_hat.dim() != rs_hat.dim() {
        return Err(Error::input(format!(
            "dimension mismatch: R_hat is {}, Rs_hat is {}",
            r_hat.dim(),
            rs_hat.dim()
        )));
    }
    if !r_hat.is_psd(1e-9) {
        return Err(Error::input("R_hat is not PSD"));
    }
    let u = UncertaintyModel::new(gamma, eps)?;
    let (weights, diagnostics) = algorithm1(&r_hat, &rs_hat, u, opts)?;
    Ok(SingleReport { weights, diagnostics, uncertainty: u, r_hat, rs_hat })
}

impl SingleReport {
    pub fn text(&self) -> String {
        let d = &self.diagnostics;
        let mut s = String::new();
        let _ = writeln!(s, "w =");
        for z in self.weights.as_slice() {
            let _ = writeln!(s, "  {}", format_complex(*z));
        }
        let _ = writeln!(s, "relaxation_value = {}", d.relaxation_value);
        let _ = writeln!(s, "achieved_value = {}", d.achieved_value);
        let _ = writeln!(s, "rank_of_W = {}", d.rank_of_w);
        let _ = writeln!(s, "recovery = {:?}", d.recovery);
        if !d.per_branch_values.is_empty() {
            let vals: Vec<String> = d.per_branch_values.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "branch_values = {}", vals.join(", "));
            let _ = writeln!(s, "selected_index = {}", d.selected_index);
        }
        s.push_str(&kkt_text(&d.relaxation.residuals));
        s.push_str(&certificate_text(&d.certificate));
        s
    }

    pub fn solution_file(&self) -> String {
        SolutionFile {
            gamma: self.uncertainty.gamma,
            eps: self.uncertainty.eps,
            r_hat: self.r_hat.clone(),
            rs_hat: self.rs_hat.clone(),
            sol: self.diagnostics.relaxation.clone(),
        }
        .to_text()
    }
}

pub fn kkt_text(r: &KktReport) -> String {
    format!(
        "kkt.comp1 = {:e}\nkkt.comp2 = {:e}\nkkt.comp3 = {:e}\nkkt.compact = {:e}\nkkt.primal = {:e}\nkkt.dual = {:e}\nkkt.gap = {:e}\n",
        r.r_comp1, r.r_comp2, r.r_comp3, r.r_compact, r.r_primal, r.r_dual, r.r_gap
    )
}

pub fn certificate_text(c: &CertificateReport) -> String {
    format!(
        "certificate.applicable = {}\ncertificate.rank_one_at_solver = {}\n\
certificate.thm42 = {} (lhs {}, rhs {})\ncertificate.cor43 = {} (lhs {}, rhs {})\n\
certificate.cor44 = {} (lhs {}, rhs {})\ncertificate.constructed_optimal = {}\n",
        c.applicable,
        c.rank_one_at_solver,
        c.thm42_holds,
        c.thm42.lhs,
        c.thm42.rhs,
        c.cor43_holds,
        c.cor43.lhs,
        c.cor43.rhs,
        c.cor44_holds,
        c.cor44.lhs,
        c.cor44.rhs,
        c.constructed_optimal
    )
}

/// Stored primal-dual pair plus the data it was solved for.
///
/// ```text
/// gamma = 0.5
/// eps = 1
/// t = ...
/// z = ...
/// [R_hat]
/// <matrix>
/// [Rs_hat]
/// ...
/// [W]  [Y]  [Z]
/// ```
pub struct SolutionFile {
    pub gamma: f64,
    pub eps: f64,
    pub r_hat: HermitianMatrix,
    pub rs_hat: HermitianMatrix,
    pub sol: ConicSolution,
}

impl SolutionFile {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "eps = {}", self.eps);
        let _ = writeln!(s, "t = {}", self.sol.t);
        let _ = writeln!(s, "z = {}", self.sol.z);
        for (name, m) in [
            ("R_hat", &self.r_hat),
            ("Rs_hat", &self.rs_hat),
            ("W", &self.sol.w),
            ("Y", &self.sol.y),
            ("Z", &self.sol.z_mat),
        ] {
            let _ = write!(s, "[{name}]\n{m}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut scalars: Vec<(String, f64)> = Vec::new();
        let mut mats: Vec<(String, HermitianMatrix)> = Vec::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
        while let Some((no, raw)) = lines.next() {
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                mats.push((name.to_string(), parse_matrix_lines(&mut lines)?));
            } else if let Some((k, v)) = l.split_once('=') {
                let v: f64 =
                    v.trim().parse().map_err(|_| Error::parse(no, format!("bad number '{}'", v.trim())))?;
                scalars.push((k.trim().to_string(), v));
            } else {
                return Err(Error::parse(no, format!("unexpected line '{l}'")));
            }
        }
        let scalar = |k: &str| {
            scalars
                .iter()
                .find(|(n, _)| n == k)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::parse(0, format!("missing '{k}'")))
        };
        let mat = |k: &str| {
            mats.iter()
                .find(|(n, _)| n == k)
                .map(|(_, m)| m.clone())
                .ok_or_else(|| Error::parse(0, format!("missing section [{k}]")))
        };
        let (w, y, z_mat) = (mat("W")?, mat("Y")?, mat("Z")?);
        let rs_hat = mat("Rs_hat")?;
        let (t, z, eps) = (scalar("t")?, scalar("z")?, scalar("eps")?);
        let primal_value = rs_hat.inner(&y) - eps * t;
        Ok(SolutionFile {
            gamma: scalar("gamma")?,
            eps,
            r_hat: mat("R_hat")?,
            rs_hat,
            sol: ConicSolution {
                w,
                y,
                t,
                z,
                z_mat,
                primal_value,
                dual_value: z,
                residuals: KktReport::default(),
                iterations: 0,
                degraded: false,
            },
        })
    }

    /// Recomputes KKT residuals and certificate inequalities.
    pub fn certify(&self) -> Result<(KktReport, CertificateReport)> {
        let u = UncertaintyModel::new(self.gamma, self.eps)?;
        let problem = RelaxationProblem::new(self.rs_hat.clone(), u.loaded(&self.r_hat), self.eps)?;
        let kkt = check_kkt(&self.sol, &problem);
        let mut cert = check_certificates(&self.sol.w, &self.sol.y, self.sol.primal_value, &self.rs_hat, &self.r_hat, u);
        cert.constructed_optimal = crate::certificate::construct_rank_one_certificate(
            &self.sol.w,
            &self.sol.y,
            &problem.a,
            &self.sol.z_mat,
        )?
        .is_some();
        Ok((kkt, cert))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::example1();
        c.scenario.geometry.n_sensors = 4;
        c.scenario.grid_points = 200;
        c.sweep = Sweep::Snr(vec![0.0, 10.0]);
        c.trials = 3;
        c.snapshots = 20;
        c
    }

    #[test]
    fn records_in_canonical_order_and_deterministic() {
        let cfg = tiny_config();
        let a = run_experiment(&cfg, &RunOptions::default()).unwrap();
        let b = run_experiment(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(a.csv(), b.csv());
        let keys: Vec<(usize, usize, Method)> = a.records.iter().map(|r| (r.grid_index, r.trial, r.method)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(keys.len(), 2 * 3 * 3);
    }

    #[test]
    fn methods_share_the_sample_covariance() {
        let mut cfg = tiny_config();
        let full = run_experiment(&cfg, &RunOptions::default()).unwrap();
        cfg.methods = vec![Method::Plugin];
        let only = run_experiment(&cfg, &RunOptions::default()).unwrap();
        for r in &only.records {
            let m = full
                .records
                .iter()
                .find(|f| f.grid_index == r.grid_index && f.trial == r.trial && f.method == Method::Plugin)
                .unwrap();
            assert_eq!(m.output_sinr_db, r.output_sinr_db);
        }
    }

    #[test]
    fn summary_recomputes_from_rows() {
        let out = run_experiment(&tiny_config(), &RunOptions::default()).unwrap();
        for row in out.summary() {
            let vals: Vec<f64> = out
                .csv()
                .lines()
                .skip(1)
                .map(|l| l.split(',').collect::<Vec<_>>())
                .filter(|f| f[2] == row.grid_index.to_string() && f[6] == row.method.name())
                .map(|f| f[8].parse::<f64>().unwrap())
                .collect();
            let mut sum = 0.0;
            for v in &vals {
                sum += v;
            }
            assert_eq!(row.mean().unwrap(), sum / vals.len() as f64);
        }
    }

    #[test]
    fn config_text_overrides_preset() {
        let cfg = ExperimentConfig::from_text(
            "experiment = example2\ntrials = 5\nspread_grid = 1, 2\nmethods = plugin, optimal\n",
        )
        .unwrap();
        assert_eq!(cfg.trials, 5);
        assert_eq!(cfg.sweep, Sweep::Spread(vec![1.0, 2.0]));
        assert_eq!(cfg.methods, vec![Method::Plugin, Method::Optimal]);
        assert!(matches!(ExperimentConfig::from_text("trials = 2\nbogus = 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ExperimentConfig::from_text("\ntrials = x\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn solution_file_round_trip() {
        let r_hat = HermitianMatrix::from_real_rows(&[&[1.0, 0.2], &[0.2, 0.5]]).unwrap();
        let rs = HermitianMatrix::from_real_rows(&[&[2.0, 0.5], &[0.5, 1.0]]).unwrap();
        let rep = run_single(r_hat, rs, 0.3, 0.4, &Algorithm1Options::default()).unwrap();
        let parsed = SolutionFile::parse(&rep.solution_file()).unwrap();
        assert_eq!(parsed.sol.w, rep.diagnostics.relaxation.w);
        let (kkt, _) = parsed.certify().unwrap();
        assert!(kkt.max_residual() < 1e-6, "{kkt:?}");
    }
}
