//! Uniform linear array model: steering vectors, incoherently scattered
//! source covariances and snapshot synthesis.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hermitian::{HermitianMatrix, C64};
use crate::random::{complex_normal_vec, rng_for};

pub const DEFAULT_GRID_POINTS: usize = 2000;

/// Gaussian densities are parameterized by angular spread; the standard
/// deviation is this fraction of it.
pub const GAUSSIAN_STD_PER_SPREAD: f64 = 0.3;

/// Gaussian support half-width in standard deviations.
pub const GAUSSIAN_SUPPORT_STDS: f64 = 4.0;

/// Relative eigenvalue threshold at which the scattered-source ranks are
/// counted (`10^-8.3`).
pub const SCATTER_RANK_TOL: f64 = 5.011872336272725e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayGeometry {
    pub n_sensors: usize,
    pub spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(n_sensors: usize, spacing_wavelengths: f64) -> Result<Self> {
        if n_sensors == 0 {
            return Err(Error::input("array needs at least one sensor"));
        }
        if !(spacing_wavelengths > 0.0 && spacing_wavelengths.is_finite()) {
            return Err(Error::input("sensor spacing must be positive"));
        }
        Ok(ArrayGeometry { n_sensors, spacing_wavelengths })
    }

    pub fn half_wavelength(n_sensors: usize) -> Result<Self> {
        ArrayGeometry::new(n_sensors, 0.5)
    }
}

/// `a_n(θ) = exp(j 2π d n sin θ)`, `n = 0..N-1`.
pub fn steering_vector(theta_deg: f64, geom: &ArrayGeometry) -> Result<Vec<C64>> {
    if !(theta_deg.abs() <= 90.0) {
        return Err(Error::input(format!("angle {theta_deg} deg outside [-90, 90]")));
    }
    Ok(steering_unchecked(theta_deg, geom))
}

fn steering_unchecked(theta_deg: f64, geom: &ArrayGeometry) -> Vec<C64> {
    let k = 2.0 * PI * geom.spacing_wavelengths * theta_deg.to_radians().sin();
    (0..geom.n_sensors).map(|n| C64::from_polar(1.0, k * n as f64)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum AngularDensity {
    Point { center_deg: f64 },
    Gaussian { center_deg: f64, spread_deg: f64 },
    /// Flat over `center ± width/2`.
    Uniform { center_deg: f64, width_deg: f64 },
    /// `exp(−|θ − center|/scale)` restricted to `support_deg`; `scale` in radians.
    TruncatedLaplacian { center_deg: f64, scale_rad: f64, support_deg: (f64, f64) },
}

impl AngularDensity {
    pub fn center_deg(&self) -> f64 {
        match *self {
            AngularDensity::Point { center_deg }
            | AngularDensity::Gaussian { center_deg, .. }
            | AngularDensity::Uniform { center_deg, .. }
            | AngularDensity::TruncatedLaplacian { center_deg, .. } => center_deg,
        }
    }

    fn validate(&self) -> Result<()> {
        let c = self.center_deg();
        if !(c.abs() <= 90.0) {
            return Err(Error::input(format!("central angle {c} deg outside [-90, 90]")));
        }
        let ok = match *self {
            AngularDensity::Point { .. } => true,
            AngularDensity::Gaussian { spread_deg, .. } => spread_deg > 0.0 && spread_deg.is_finite(),
            AngularDensity::Uniform { width_deg, .. } => width_deg > 0.0 && width_deg.is_finite(),
            AngularDensity::TruncatedLaplacian { scale_rad, support_deg: (lo, hi), .. } => {
                scale_rad > 0.0 && scale_rad.is_finite() && lo < hi
            }
        };
        if !ok {
            return Err(Error::input(format!("invalid density parameters: {self:?}")));
        }
        Ok(())
    }

    /// Integration interval clipped to the visible region.
    fn support(&self) -> Result<(f64, f64)> {
        let (lo, hi) = match *self {
            AngularDensity::Point { center_deg } => (center_deg, center_deg),
            AngularDensity::Gaussian { center_deg, spread_deg } => {
                let h = GAUSSIAN_SUPPORT_STDS * GAUSSIAN_STD_PER_SPREAD * spread_deg;
                (center_deg - h, center_deg + h)
            }
            AngularDensity::Uniform { center_deg, width_deg } => {
                (center_deg - width_deg / 2.0, center_deg + width_deg / 2.0)
            }
            AngularDensity::TruncatedLaplacian { support_deg, .. } => support_deg,
        };
        let (lo, hi) = (lo.max(-90.0), hi.min(90.0));
        if lo > hi || (lo == hi && !matches!(self, AngularDensity::Point { .. })) {
            return Err(Error::input("density support is empty inside [-90, 90]"));
        }
        Ok((lo, hi))
    }

    /// Unnormalized density value.
    fn value(&self, theta_deg: f64) -> f64 {
        match *self {
            AngularDensity::Point { .. } | AngularDensity::Uniform { .. } => 1.0,
            AngularDensity::Gaussian { center_deg, spread_deg } => {
                let z = (theta_deg - center_deg) / (GAUSSIAN_STD_PER_SPREAD * spread_deg);
                (-0.5 * z * z).exp()
            }
            AngularDensity::TruncatedLaplacian { center_deg, scale_rad, .. } => {
                (-(theta_deg - center_deg).abs().to_radians() / scale_rad).exp()
            }
        }
    }
}

/// Composite Simpson weights on `n ≥ 2` equispaced points, closing with the
/// 3/8 rule when the interval count is odd. Unscaled by the step.
fn quadrature_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        2 => return vec![0.5, 0.5],
        3 => return vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        _ => {}
    }
    let simpson_end = if n % 2 == 1 { n } else { n - 3 };
    for (i, wi) in w.iter_mut().enumerate().take(simpson_end) {
        let base = if i == 0 || i == simpson_end - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        *wi = base / 3.0;
    }
    if simpson_end < n {
        for (k, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[n - 4 + k] += c * 3.0 / 8.0;
        }
    }
    w
}

/// `σ² Σ_g ρ_g a(θ_g)a(θ_g)ᴴ` with quadrature weights `ρ_g` summing to one.
pub fn scattered_covariance(
    density: &AngularDensity,
    power_db: f64,
    geom: &ArrayGeometry,
    grid_points: usize,
) -> Result<HermitianMatrix> {
    density.validate()?;
    let power = db_to_power(power_db);
    let (lo, hi) = density.support()?;
    if let AngularDensity::Point { center_deg } = *density {
        return Ok(HermitianMatrix::outer(&steering_unchecked(center_deg, geom)).scale(power));
    }
    if grid_points < 2 {
        return Err(Error::input("angular grid needs at least two points"));
    }
    let step = (hi - lo) / (grid_points - 1) as f64;
    let qw = quadrature_weights(grid_points);
    let weights: Vec<f64> =
        (0..grid_points).map(|g| qw[g] * density.value(lo + step * g as f64)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::input("density has no mass on its support"));
    }
    let n = geom.n_sensors;
    // Toeplitz structure: entry (p, q) depends on p − q only.
    let mut lags = vec![C64::new(0.0, 0.0); n];
    for (g, wg) in weights.iter().enumerate() {
        let a = steering_unchecked(lo + step * g as f64, geom);
        for (lag, acc) in lags.iter_mut().enumerate() {
            *acc += a[lag] * (wg / total);
        }
    }
    HermitianMatrix::from_fn(n, |p, q| {
        if p >= q {
            lags[p - q] * power
        } else {
            lags[q - p].conj() * power
        }
    })
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn power_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Source {
    pub density: AngularDensity,
    pub power_db: f64,
}

/// Parameters of a simulation world; covariances derive from these.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub geometry: ArrayGeometry,
    pub signal: Source,
    pub interferers: Vec<Source>,
    pub noise_power_db: f64,
    /// Presumed signal shape; it takes the signal's power.
    pub presumed: AngularDensity,
    pub grid_points: usize,
}

impl ScenarioSpec {
    /// Array, interference and presumed signal of the simulation section,
    /// with the given desired-signal density and SNR.
    pub fn reference(signal: AngularDensity, snr_db: f64) -> Self {
        ScenarioSpec {
            geometry: ArrayGeometry { n_sensors: 10, spacing_wavelengths: 0.5 },
            signal: Source { density: signal, power_db: snr_db },
            interferers: vec![Source {
                density: AngularDensity::Uniform { center_deg: 10.0, width_deg: 10.0 },
                power_db: 30.0,
            }],
            noise_power_db: 0.0,
            presumed: AngularDensity::Gaussian { center_deg: 34.0, spread_deg: 6.0 },
            grid_points: DEFAULT_GRID_POINTS,
        }
    }

    pub fn build(&self) -> Result<Scenario> {
        Scenario::new(self.clone())
    }
}

/// A scenario with its covariances and sampling factors.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub rs: HermitianMatrix,
    /// Sum of interferer covariances.
    pub ri: HermitianMatrix,
    /// `R_i + σ_n² I`
    pub r_in: HermitianMatrix,
    pub rs_hat: HermitianMatrix,
    rs_sqrt: HermitianMatrix,
    ri_sqrt: HermitianMatrix,
    noise_std: f64,
}

/// Per-snapshot components, kept separate for statistical checks.
#[derive(Clone, Debug)]
pub struct SnapshotStreams {
    pub signal: Vec<Vec<C64>>,
    pub interference: Vec<Vec<C64>>,
    pub noise: Vec<Vec<C64>>,
}

impl SnapshotStreams {
    pub fn observations(&self) -> Vec<Vec<C64>> {
        (0..self.signal.len())
            .map(|t| {
                (0..self.signal[t].len())
                    .map(|k| self.signal[t][k] + self.interference[t][k] + self.noise[t][k])
                    .collect()
            })
            .collect()
    }
}

impl Scenario {
    pub fn new(spec: ScenarioSpec) -> Result<Self> {
        let g = &spec.geometry;
        let n = g.n_sensors;
        let rs = scattered_covariance(&spec.signal.density, spec.signal.power_db, g, spec.grid_points)?;
        let mut ri = HermitianMatrix::zeros(n);
        for src in &spec.interferers {
            ri = ri.add(&scattered_covariance(&src.density, src.power_db, g, spec.grid_points)?);
        }
        let noise = db_to_power(spec.noise_power_db);
        let r_in = ri.add_identity(noise);
        let rs_hat = scattered_covariance(&spec.presumed, spec.signal.power_db, g, spec.grid_points)?;
        Ok(Scenario {
            rs_sqrt: rs.sqrt_psd()?,
            ri_sqrt: ri.sqrt_psd()?,
            noise_std: noise.sqrt(),
            spec,
            rs,
            ri,
            r_in,
            rs_hat,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.geometry.n_sensors
    }

    /// Draws `T` snapshots of each independent component. Per snapshot the
    /// draw order is signal, interference, noise.
    pub fn simulate_streams(&self, t: usize, seed: u64) -> SnapshotStreams {
        let n = self.dim();
        let mut rng = rng_for(seed);
        let mut out = SnapshotStreams {
            signal: Vec::with_capacity(t),
            interference: Vec::with_capacity(t),
            noise: Vec::with_capacity(t),
        };
        for _ in 0..t {
            out.signal.push(self.rs_sqrt.mul_vec(&complex_normal_vec(&mut rng, n)));
            out.interference.push(self.ri_sqrt.mul_vec(&complex_normal_vec(&mut rng, n)));
            out.noise.push(complex_normal_vec(&mut rng, n).into_iter().map(|z| z * self.noise_std).collect());
        }
        out
    }
}

/// `R̂ = (1/T) Σ y(t) y(t)ᴴ`
pub fn sample_covariance(snapshots: &[Vec<C64>]) -> Result<HermitianMatrix> {
    let first = snapshots.first().ok_or_else(|| Error::input("no snapshots"))?;
    let n = first.len();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for y in snapshots {
        if y.len() != n {
            return Err(Error::input("snapshot length mismatch"));
        }
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] += y[i] * y[j].conj();
            }
        }
    }
    let inv = 1.0 / snapshots.len() as f64;
    HermitianMatrix::from_fn(n, |i, j| data[i * n + j] * inv)
}

pub fn simulate_snapshots(scenario: &Scenario, t: usize, seed: u64) -> Result<HermitianMatrix> {
    if t == 0 {
        return Err(Error::input("need at least one snapshot"));
    }
    sample_covariance(&scenario.simulate_streams(t, seed).observations())
}

/// Flat `key = value` text with `#` comments. Keys may repeat; values keep
/// their source line for error reporting.
#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, Vec<(usize, String)>>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(idx + 1, format!("expected key = value, got '{line}'")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse(idx + 1, "empty key"));
            }
            kv.entries.entry(k.to_string()).or_default().push((idx + 1, v.trim().to_string()));
        }
        Ok(kv)
    }

    pub fn keys(&self) -> impl Iterator<Item = (&str, usize)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v[0].0))
    }

    fn single(&self, key: &str) -> Result<Option<(usize, &str)>> {
        match self.entries.get(key).map(|v| v.as_slice()) {
            None => Ok(None),
            Some([(l, v)]) => Ok(Some((*l, v.as_str()))),
            Some(many) => Err(Error::parse(many[1].0, format!("duplicate key '{key}'"))),
        }
    }

    pub fn all(&self, key: &str) -> &[(usize, String)] {
        self.entries.get(key).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn get_str(&self, key: &str) -> Result<Option<(usize, &str)>> {
        self.single(key)
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.single(key)? {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::parse(line, format!("cannot parse value '{v}' for '{key}'"))),
        }
    }

    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.single(key)? {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| Error::parse(line, format!("cannot parse list '{v}' for '{key}'"))),
        }
    }
}

/// `gaussian C S`, `uniform C W`, `laplacian C SCALE LO HI` or `point C`.
pub fn parse_density(text: &str, line: usize) -> Result<AngularDensity> {
    let mut it = text.split_whitespace();
    let kind = it.next().ok_or_else(|| Error::parse(line, "empty density"))?;
    let nums: Vec<f64> = it
        .map(|s| s.parse::<f64>().map_err(|_| Error::parse(line, format!("bad number '{s}'"))))
        .collect::<Result<_>>()?;
    let want = |k: usize| -> Result<()> {
        if nums.len() != k {
            return Err(Error::parse(line, format!("'{kind}' takes {k} numbers, got {}", nums.len())));
        }
        Ok(())
    };
    let d = match kind {
        "point" => {
            want(1)?;
            AngularDensity::Point { center_deg: nums[0] }
        }
        "gaussian" => {
            want(2)?;
            AngularDensity::Gaussian { center_deg: nums[0], spread_deg: nums[1] }
        }
        "uniform" => {
            want(2)?;
            AngularDensity::Uniform { center_deg: nums[0], width_deg: nums[1] }
        }
        "laplacian" => {
            want(4)?;
            AngularDensity::TruncatedLaplacian {
                center_deg: nums[0],
                scale_rad: nums[1],
                support_deg: (nums[2], nums[3]),
            }
        }
        other => return Err(Error::parse(line, format!("unknown density kind '{other}'"))),
    };
    d.validate().map_err(|e| Error::parse(line, e.to_string()))?;
    Ok(d)
}

/// Scenario keys recognized by [`scenario_from_config`].
pub const SCENARIO_KEYS: &[&str] =
    &["sensors", "spacing", "noise_db", "signal", "snr_db", "interferer", "presumed", "grid_points"];

/// Missing keys fall back to [`ScenarioSpec::reference`] with the Gaussian
/// signal. `interferer` may repeat: `interferer = uniform 10 10 @ 30` gives
/// density then power in dB.
pub fn scenario_from_config(kv: &KeyValues) -> Result<ScenarioSpec> {
    let mut spec = ScenarioSpec::reference(AngularDensity::Gaussian { center_deg: 30.0, spread_deg: 4.0 }, 10.0);
    if let Some(n) = kv.get::<usize>("sensors")? {
        spec.geometry.n_sensors = n;
    }
    if let Some(d) = kv.get::<f64>("spacing")? {
        spec.geometry.spacing_wavelengths = d;
    }
    spec.geometry = ArrayGeometry::new(spec.geometry.n_sensors, spec.geometry.spacing_wavelengths)?;
    if let Some(v) = kv.get::<f64>("noise_db")? {
        spec.noise_power_db = v;
    }
    if let Some(v) = kv.get::<f64>("snr_db")? {
        spec.signal.power_db = v;
    }
    if let Some((line, v)) = kv.get_str("signal")? {
        spec.signal.density = parse_density(v, line)?;
    }
    if let Some((line, v)) = kv.get_str("presumed")? {
        spec.presumed = parse_density(v, line)?;
    }
    let inter = kv.all("interferer");
    if !inter.is_empty() {
        spec.interferers = inter
            .iter()
            .map(|(line, v)| {
                let (d, p) = v
                    .split_once('@')
                    .ok_or_else(|| Error::parse(*line, "interferer needs '<density> @ <power_db>'"))?;
                let power_db =
                    p.trim().parse::<f64>().map_err(|_| Error::parse(*line, format!("bad power '{}'", p.trim())))?;
                Ok(Source { density: parse_density(d, *line)?, power_db })
            })
            .collect::<Result<_>>()?;
    }
    if let Some(g) = kv.get::<usize>("grid_points")? {
        spec.grid_points = g;
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::numeric_rank;

    fn ula(n: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(n).unwrap()
    }

    #[test]
    fn steering_examples() {
        let a = steering_vector(0.0, &ula(4)).unwrap();
        assert!(a.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        let a = steering_vector(30.0, &ula(5)).unwrap();
        let j = C64::new(0.0, 1.0);
        for (n, z) in a.iter().enumerate() {
            assert!((z - j.powi(n as i32)).norm() < 1e-12);
        }
        assert!((crate::hermitian::norm_sqr(&steering_vector(-71.3, &ula(7)).unwrap()) - 7.0).abs() < 1e-12);
        assert!(steering_vector(90.5, &ula(3)).is_err());
    }

    #[test]
    fn quadrature_integrates_cubics() {
        for n in [4usize, 5, 10, 11, 2000] {
            let w = quadrature_weights(n);
            let h = 1.0 / (n - 1) as f64;
            let integral: f64 = w.iter().enumerate().map(|(i, wi)| wi * h * (i as f64 * h).powi(3)).sum();
            assert!((integral - 0.25).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn trace_equals_power_times_sensors() {
        let g = ula(10);
        for d in [
            AngularDensity::Point { center_deg: 12.0 },
            AngularDensity::Gaussian { center_deg: 30.0, spread_deg: 4.0 },
            AngularDensity::Uniform { center_deg: 10.0, width_deg: 10.0 },
            AngularDensity::TruncatedLaplacian { center_deg: 30.0, scale_rad: 0.1, support_deg: (15.0, 45.0) },
        ] {
            let r = scattered_covariance(&d, 7.0, &g, DEFAULT_GRID_POINTS).unwrap();
            assert!((r.trace() / db_to_power(7.0) - 10.0).abs() < 1e-8);
            assert!(r.is_psd(1e-10));
        }
    }

    #[test]
    fn point_source_is_rank_one() {
        let r = scattered_covariance(&AngularDensity::Point { center_deg: -20.0 }, 0.0, &ula(6), 2).unwrap();
        assert_eq!(numeric_rank(&r, 1e-10).unwrap(), 1);
    }

    #[test]
    fn empty_support_rejected() {
        let d = AngularDensity::TruncatedLaplacian { center_deg: 30.0, scale_rad: 0.1, support_deg: (91.0, 95.0) };
        assert!(scattered_covariance(&d, 0.0, &ula(3), 100).is_err());
    }

    #[test]
    fn snapshots_are_reproducible() {
        let s = ScenarioSpec::reference(AngularDensity::Gaussian { center_deg: 30.0, spread_deg: 4.0 }, 0.0)
            .build()
            .unwrap();
        let a = simulate_snapshots(&s, 50, 9).unwrap();
        let b = simulate_snapshots(&s, 50, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate_snapshots(&s, 50, 10).unwrap());
    }

    #[test]
    fn config_parsing() {
        let kv = KeyValues::parse(
            "# world\nsensors = 6\nsignal = laplacian 30 0.1 15 45\ninterferer = uniform 10 10 @ 30\ninterferer = point -40 @ 20\n",
        )
        .unwrap();
        let spec = scenario_from_config(&kv).unwrap();
        assert_eq!(spec.geometry.n_sensors, 6);
        assert_eq!(spec.interferers.len(), 2);
        assert!(matches!(spec.signal.density, AngularDensity::TruncatedLaplacian { .. }));

        let err = scenario_from_config(&KeyValues::parse("sensors = 4\n\nsignal = cauchy 3 1\n").unwrap());
        assert!(matches!(err, Err(Error::Parse { line: 3, .. })));
        assert!(matches!(KeyValues::parse("a = 1\nnonsense\n"), Err(Error::Parse { line: 2, .. })));
    }
}
