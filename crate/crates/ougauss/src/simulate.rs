//! Exact-in-law Gaussian path sampling on a uniform grid and construction of
//! the Ornstein-Uhlenbeck solution path.
//!
//! Sampling factors the Gram matrix [R(t_i, t_j)], i,j >= 1 once per
//! (kernel, grid) and reuses the factor across seeds; replication k draws
//! from an independent, deterministic RNG stream of the base seed.

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::CholeskyFactor;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::io::{BufRead, Write};

/// Grids above this size need [`GramFactor::new_unbounded`].
pub const DEFAULT_MAX_GRID: usize = 1 << 14;

/// Uniform observation grid t_i = i * delta, i = 0..=n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n: usize,
    delta: f64,
}

impl TimeGrid {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n == 0 || !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Configuration(format!(
                "grid needs n >= 1 and delta > 0 (got n={n}, delta={delta})"
            )));
        }
        Ok(TimeGrid { n, delta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// t_i, computed as i * delta so the arithmetic path is reproducible.
    pub fn t(&self, i: usize) -> f64 {
        i as f64 * self.delta
    }

    pub fn horizon(&self) -> f64 {
        self.n as f64 * self.delta
    }
}

/// Sampled noise values G_{t_i} on a grid; `values[0] = 0`.
#[derive(Debug, Clone)]
pub struct GaussianPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub seed: u64,
    pub spec: KernelSpec,
}

/// Reusable Cholesky factor of the Gram matrix for one (kernel, grid) pair.
#[derive(Debug, Clone)]
pub struct GramFactor {
    spec: KernelSpec,
    grid: TimeGrid,
    factor: CholeskyFactor,
}

impl GramFactor {
    pub fn new(spec: &KernelSpec, grid: TimeGrid) -> Result<Self> {
        if grid.n() > DEFAULT_MAX_GRID {
            return Err(Error::Configuration(format!(
                "grid size {} exceeds the default cap {DEFAULT_MAX_GRID}; use new_unbounded",
                grid.n()
            )));
        }
        Self::new_unbounded(spec, grid)
    }

    /// Same as [`GramFactor::new`] without the grid-size cap.
    pub fn new_unbounded(spec: &KernelSpec, grid: TimeGrid) -> Result<Self> {
        let gram = gram_matrix(spec, grid)?;
        let factor = CholeskyFactor::factor(&gram)?;
        Ok(GramFactor {
            spec: *spec,
            grid,
            factor,
        })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Draw the path for `(base_seed, replication)`: an independent stream
    /// per replication, deterministic across runs and schedulers.
    pub fn sample_replication(&self, base_seed: u64, replication: u64) -> GaussianPath {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
        rng.set_stream(replication);
        let n = self.grid.n();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        values.extend(self.factor.matvec(&z));
        GaussianPath {
            grid: self.grid,
            values,
            seed: base_seed,
            spec: self.spec,
        }
    }

    pub fn sample(&self, seed: u64) -> GaussianPath {
        self.sample_replication(seed, 0)
    }
}

/// Full Gram matrix [R(t_i, t_j)] for i, j = 1..=n (t_0 = 0 excluded:
/// G_0 is deterministically zero).
fn gram_matrix(spec: &KernelSpec, grid: TimeGrid) -> Result<Vec<Vec<f64>>> {
    let n = grid.n();
    let rows: Vec<Result<Vec<f64>>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let ti = grid.t(i);
            (1..=n).map(|j| spec.eval(ti, grid.t(j))).collect()
        })
        .collect();
    rows.into_iter().collect()
}

/// One-shot sampling; prefer [`GramFactor`] when drawing many replications.
pub fn sample_gaussian_path(spec: &KernelSpec, grid: TimeGrid, seed: u64) -> Result<GaussianPath> {
    Ok(GramFactor::new(spec, grid)?.sample(seed))
}

/// Rule for the Stieltjes sums approximating zeta increments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ZetaRule {
    /// e^{-theta t_{i-1}} (G_{t_i} - G_{t_{i-1}}); the default.
    #[default]
    LeftPoint,
    /// e^{-theta (t_{i-1}+t_i)/2} (G_{t_i} - G_{t_{i-1}}); for error studies.
    Midpoint,
}

/// OU solution path X on a grid, with the auxiliary integrals.
#[derive(Debug, Clone)]
pub struct OUPath {
    pub grid: TimeGrid,
    pub theta: f64,
    pub x_values: Vec<f64>,
    pub zeta_values: Vec<f64>,
    pub z_values: Vec<f64>,
    pub source: GaussianPath,
}

/// Build X from a noise path: zeta by Stieltjes sums against the noise
/// increments, X_t = e^{theta t} zeta_t (computed in signed log space so
/// large theta * t cannot overflow intermediate products), Z by trapezoid.
pub fn build_ou_path(g: &GaussianPath, theta: f64) -> Result<OUPath> {
    build_ou_path_with(g, theta, ZetaRule::LeftPoint)
}

pub fn build_ou_path_with(g: &GaussianPath, theta: f64, rule: ZetaRule) -> Result<OUPath> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::Configuration(format!(
            "drift parameter must be positive, got {theta}"
        )));
    }
    let grid = g.grid;
    let n = grid.n();
    let mut zeta = Vec::with_capacity(n + 1);
    let mut x = Vec::with_capacity(n + 1);
    let mut z = Vec::with_capacity(n + 1);
    zeta.push(0.0);
    x.push(0.0);
    z.push(0.0);
    for i in 1..=n {
        let t_prev = grid.t(i - 1);
        let t_cur = grid.t(i);
        let weight_t = match rule {
            ZetaRule::LeftPoint => t_prev,
            ZetaRule::Midpoint => 0.5 * (t_prev + t_cur),
        };
        let dg = g.values[i] - g.values[i - 1];
        let zi = zeta[i - 1] + (-theta * weight_t).exp() * dg;
        zeta.push(zi);
        x.push(exp_scaled(theta * t_cur, zi));
        let zi_trap = z[i - 1]
            + 0.5
                * grid.delta()
                * ((-theta * t_prev).exp() * g.values[i - 1]
                    + (-theta * t_cur).exp() * g.values[i]);
        z.push(zi_trap);
    }
    Ok(OUPath {
        grid,
        theta,
        x_values: x,
        zeta_values: zeta,
        z_values: z,
        source: g.clone(),
    })
}

/// sign(v) * exp(a + ln|v|): e^a * v without forming e^a.
pub fn exp_scaled(a: f64, v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * (a + v.abs().ln()).exp()
    }
}

/// Conditionally sample the noise at the refined grid (delta / factor),
/// preserving the original values exactly (Gaussian bridge through the
/// Schur complement of the extended Gram matrix).
pub fn refine_path(g: &GaussianPath, factor: usize, seed: u64) -> Result<GaussianPath> {
    if factor < 2 {
        return Err(Error::Configuration(format!(
            "refinement factor must be >= 2, got {factor}"
        )));
    }
    let n = g.grid.n();
    let fine_grid = TimeGrid::new(n * factor, g.grid.delta() / factor as f64)?;
    if fine_grid.n() > DEFAULT_MAX_GRID {
        return Err(Error::Configuration(format!(
            "refined grid size {} exceeds the cap {DEFAULT_MAX_GRID}",
            fine_grid.n()
        )));
    }

    let observed: Vec<usize> = (1..=n).map(|i| i * factor).collect();
    let new_idx: Vec<usize> = (1..=fine_grid.n()).filter(|i| i % factor != 0).collect();
    let m = new_idx.len();

    // blocks of the fine Gram matrix
    let obs_gram: Vec<Vec<f64>> = observed
        .iter()
        .map(|&i| {
            observed
                .iter()
                .map(|&j| g.spec.eval(fine_grid.t(i), fine_grid.t(j)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let l_obs = CholeskyFactor::factor(&obs_gram)?;

    // W = L^{-1} B, column per new point
    let mut w_cols = Vec::with_capacity(m);
    for &j in &new_idx {
        let col: Vec<f64> = observed
            .iter()
            .map(|&i| g.spec.eval(fine_grid.t(i), fine_grid.t(j)))
            .collect::<Result<_>>()?;
        w_cols.push(l_obs.forward_solve(&col));
    }
    let y = l_obs.forward_solve(&g.values[1..]);

    // conditional mean and covariance
    let mean: Vec<f64> = w_cols.iter().map(|w| dot(w, &y)).collect();
    let mut cond = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..=a {
            let c = g.spec.eval(fine_grid.t(new_idx[a]), fine_grid.t(new_idx[b]))?
                - dot(&w_cols[a], &w_cols[b]);
            cond[a][b] = c;
            cond[b][a] = c;
        }
    }
    let l_cond = CholeskyFactor::factor(&cond)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX); // keep refinement draws off the replication streams
    let zs: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let noise = l_cond.matvec(&zs);

    let mut values = vec![0.0; fine_grid.n() + 1];
    for (k, &i) in observed.iter().enumerate() {
        values[i] = g.values[k + 1];
    }
    for (k, &i) in new_idx.iter().enumerate() {
        values[i] = mean[k] + noise[k];
    }
    Ok(GaussianPath {
        grid: fine_grid,
        values,
        seed,
        spec: g.spec,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conditional variances of the bridge at the new points (diagnostics and
/// tests: conditioning can only shrink the marginal variance).
pub fn bridge_conditional_variances(g: &GaussianPath, factor: usize) -> Result<Vec<(f64, f64)>> {
    if factor < 2 {
        return Err(Error::Configuration("factor must be >= 2".into()));
    }
    let n = g.grid.n();
    let fine_grid = TimeGrid::new(n * factor, g.grid.delta() / factor as f64)?;
    let observed: Vec<usize> = (1..=n).map(|i| i * factor).collect();
    let obs_gram: Vec<Vec<f64>> = observed
        .iter()
        .map(|&i| {
            observed
                .iter()
                .map(|&j| g.spec.eval(fine_grid.t(i), fine_grid.t(j)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let l_obs = CholeskyFactor::factor(&obs_gram)?;
    let mut out = Vec::new();
    for j in (1..=fine_grid.n()).filter(|i| i % factor != 0) {
        let tj = fine_grid.t(j);
        let col: Vec<f64> = observed
            .iter()
            .map(|&i| g.spec.eval(fine_grid.t(i), tj))
            .collect::<Result<_>>()?;
        let w = l_obs.forward_solve(&col);
        out.push((tj, g.spec.eval(tj, tj)? - dot(&w, &w)));
    }
    Ok(out)
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl OUPath {
    /// CSV with columns t,G,X,zeta,Z (17 significant digits).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,G,X,zeta,Z")?;
        for i in 0..=self.grid.n() {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt17(self.grid.t(i)),
                fmt17(self.source.values[i]),
                fmt17(self.x_values[i]),
                fmt17(self.zeta_values[i]),
                fmt17(self.z_values[i]),
            )?;
        }
        Ok(())
    }
}

/// An externally observed path: whatever columns were present, at least t
/// and X, on a uniform grid.
#[derive(Debug, Clone)]
pub struct ObservedPath {
    pub grid: TimeGrid,
    pub x_values: Vec<f64>,
}

/// Parse a path CSV with a header containing at least `t` and `X` columns.
/// The t column must be uniformly spaced starting at 0.
pub fn read_path_csv<R: BufRead>(r: R) -> Result<ObservedPath> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty path file".into()))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let t_col = cols
        .iter()
        .position(|c| c.trim() == "t")
        .ok_or_else(|| Error::Parse("missing 't' column".into()))?;
    let x_col = cols
        .iter()
        .position(|c| c.trim() == "X")
        .ok_or_else(|| Error::Parse("missing 'X' column".into()))?;
    let mut ts = Vec::new();
    let mut xs = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .ok_or_else(|| Error::Parse(format!("short row: {line}")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad number in row '{line}': {e}")))
        };
        ts.push(parse(t_col)?);
        xs.push(parse(x_col)?);
    }
    if ts.len() < 2 {
        return Err(Error::Parse("need at least two rows".into()));
    }
    if ts[0] != 0.0 {
        return Err(Error::Parse("t must start at 0".into()));
    }
    let delta = ts[1] - ts[0];
    let grid = TimeGrid::new(ts.len() - 1, delta)?;
    for (i, &t) in ts.iter().enumerate() {
        if (t - grid.t(i)).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::Parse(format!(
                "t column is not uniform at row {i}: {t} vs {}",
                grid.t(i)
            )));
        }
    }
    Ok(ObservedPath { grid, x_values: xs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fbm07() -> KernelSpec {
        KernelSpec::fbm(0.7).unwrap()
    }

    #[test]
    fn path_starts_at_zero_and_is_seed_deterministic() {
        let grid = TimeGrid::new(16, 0.25).unwrap();
        let fac = GramFactor::new(&fbm07(), grid).unwrap();
        let a = fac.sample(42);
        let b = fac.sample(42);
        let c = fac.sample(43);
        assert_eq!(a.values[0], 0.0);
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn replication_streams_differ_and_are_stable() {
        let grid = TimeGrid::new(8, 0.5).unwrap();
        let fac = GramFactor::new(&fbm07(), grid).unwrap();
        let r0 = fac.sample_replication(7, 0);
        let r1 = fac.sample_replication(7, 1);
        assert_ne!(r0.values, r1.values);
        assert_eq!(r1.values, fac.sample_replication(7, 1).values);
    }

    #[test]
    fn ou_reconstruction_identity() {
        let grid = TimeGrid::new(64, 0.125).unwrap();
        let fac = GramFactor::new(&fbm07(), grid).unwrap();
        let g = fac.sample(5);
        let theta = 0.8;
        let p = build_ou_path(&g, theta).unwrap();
        for i in 0..=grid.n() {
            let lhs = exp_scaled(theta * grid.t(i), p.zeta_values[i]);
            let rel = if p.x_values[i] == 0.0 {
                lhs.abs()
            } else {
                ((lhs - p.x_values[i]) / p.x_values[i]).abs()
            };
            assert!(rel <= 1e-10, "i={i}: {lhs} vs {}", p.x_values[i]);
        }
    }

    #[test]
    fn tiny_theta_degenerates_to_noise() {
        let grid = TimeGrid::new(32, 0.25).unwrap();
        let fac = GramFactor::new(&fbm07(), grid).unwrap();
        let g = fac.sample(11);
        let p = build_ou_path(&g, 1e-8).unwrap();
        for i in 0..=grid.n() {
            assert_relative_eq!(p.x_values[i], g.values[i], epsilon = 1e-5);
        }
    }

    #[test]
    fn zero_noise_gives_zero_solution() {
        let grid = TimeGrid::new(8, 0.5).unwrap();
        let g = GaussianPath {
            grid,
            values: vec![0.0; 9],
            seed: 0,
            spec: fbm07(),
        };
        let p = build_ou_path(&g, 1.0).unwrap();
        assert!(p.x_values.iter().all(|&x| x == 0.0));
        assert!(p.z_values.iter().all(|&z| z == 0.0));
    }

    #[test]
    fn refinement_preserves_observed_values() {
        let grid = TimeGrid::new(12, 0.25).unwrap();
        let fac = GramFactor::new(&fbm07(), grid).unwrap();
        let g = fac.sample(3);
        let fine = refine_path(&g, 2, 99).unwrap();
        assert_eq!(fine.grid.n(), 24);
        for i in 0..=12 {
            assert_eq!(fine.values[2 * i], g.values[i], "coarse point {i}");
        }
    }

    #[test]
    fn bridge_variance_below_marginal() {
        let grid = TimeGrid::new(10, 0.3).unwrap();
        let fac = GramFactor::new(&fbm07(), grid).unwrap();
        let g = fac.sample(17);
        for (t, v) in bridge_conditional_variances(&g, 2).unwrap() {
            let marginal = g.spec.eval(t, t).unwrap();
            assert!(v <= marginal + 1e-10, "t={t}: {v} > {marginal}");
            assert!(v > -1e-10);
        }
    }

    #[test]
    fn csv_roundtrip() {
        let grid = TimeGrid::new(6, 0.5).unwrap();
        let fac = GramFactor::new(&fbm07(), grid).unwrap();
        let p = build_ou_path(&fac.sample(1), 1.0).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let obs = read_path_csv(std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(obs.grid.n(), 6);
        assert_relative_eq!(obs.grid.delta(), 0.5);
        for i in 0..=6 {
            assert_relative_eq!(obs.x_values[i], p.x_values[i], max_relative = 1e-15);
        }
    }

    #[test]
    fn grid_cap_enforced() {
        let grid = TimeGrid::new(DEFAULT_MAX_GRID + 1, 1e-4).unwrap();
        assert!(matches!(
            GramFactor::new(&fbm07(), grid),
            Err(Error::Configuration(_))
        ));
    }
}
