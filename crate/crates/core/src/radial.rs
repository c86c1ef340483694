//! Uniform cell-centered radial grids, density profiles, midpoint quadrature,
//! the radial Newtonian potential, and the functionals built from them
//! (masses, L^m norms, interaction energy, free energy, dissipation,
//! second moment, virial rate).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Parameters;

/// Relative cutoff below which a cell is treated as outside the support
/// when forming gradients of u^{m-1}.
pub const SUPPORT_CUTOFF: f64 = 1e-14;

/// Uniform cell-centered grid on [0, r_max] with n cells of width dr.
///
/// Cell k has center (k + 1/2) dr and exact shell volume
/// sigma (r_{k+1}^d - r_k^d) / d. The grid carries the dimensional
/// constants so that profiles on it are self-describing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialGrid {
    pub n: usize,
    pub dr: f64,
    pub d: u32,
    pub sigma: f64,
    pub c_d: f64,
    centers: Vec<f64>,
    volumes: Vec<f64>,
}

impl PartialEq for RadialGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.dr == other.dr && self.d == other.d && self.c_d == other.c_d
    }
}

impl RadialGrid {
    pub fn new(params: &Parameters, n: usize, r_max: f64) -> Result<Arc<Self>> {
        if n < 8 {
            return Err(Error::InvalidParameters(format!("grid needs n >= 8 cells, got {n}")));
        }
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidParameters(format!("r_max = {r_max} must be positive")));
        }
        let dr = r_max / n as f64;
        Ok(Arc::new(Self::from_raw(n, dr, params.d, params.sigma, params.c_d)))
    }

    /// Same cell structure, every radius scaled by `1/mu` (dilation x -> mu x).
    pub fn dilated(&self, mu: f64) -> Arc<Self> {
        Arc::new(Self::from_raw(self.n, self.dr / mu, self.d, self.sigma, self.c_d))
    }

    fn from_raw(n: usize, dr: f64, d: u32, sigma: f64, c_d: f64) -> Self {
        let dd = d as f64;
        let centers = (0..n).map(|k| (k as f64 + 0.5) * dr).collect();
        let volumes = (0..n)
            .map(|k| {
                let r0 = k as f64 * dr;
                let r1 = (k + 1) as f64 * dr;
                sigma * (r1.powi(d as i32) - r0.powi(d as i32)) / dd
            })
            .collect();
        RadialGrid { n, dr, d, sigma, c_d, centers, volumes }
    }

    pub fn r_max(&self) -> f64 {
        self.n as f64 * self.dr
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Radius of interface i (i = 0..=n).
    pub fn interface(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    /// Area of interface i, sigma r^{d-1}.
    pub fn interface_area(&self, i: usize) -> f64 {
        self.sigma * self.interface(i).powi(self.d as i32 - 1)
    }

    /// Volume of the ball of radius r_max (equals the sum of cell volumes).
    pub fn total_volume(&self) -> f64 {
        self.sigma * self.r_max().powi(self.d as i32) / self.d as f64
    }
}

/// A nonnegative radial profile, constant on each grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialDensity {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialDensity {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidParameters(format!(
                "profile has {} values for a {}-cell grid",
                values.len(),
                grid.n
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameters(
                "profile values must be finite and nonnegative".into(),
            ));
        }
        Ok(RadialDensity { grid, values })
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let n = grid.n;
        RadialDensity { grid, values: vec![0.0; n] }
    }

    /// Sample `f(r)` at cell centers, clamping negatives to zero.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.centers().iter().map(|&r| f(r).max(0.0)).collect();
        RadialDensity { grid, values }
    }

    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.volumes())
            .map(|(v, w)| v * w)
            .sum()
    }

    /// sum v^p w, the p-th power of the L^p norm.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        if p == 1.0 {
            return self.mass();
        }
        self.values
            .iter()
            .zip(self.grid.volumes())
            .map(|(v, w)| v.powf(p) * w)
            .sum()
    }

    /// (sum v^p w)^{1/p}; exact for piecewise-constant profiles.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "lp_norm requires p >= 1");
        self.lp_norm_pow(p).powf(1.0 / p)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// Fraction of mass outside radius r.
    pub fn mass_beyond(&self, r: f64) -> f64 {
        self.values
            .iter()
            .zip(self.grid.volumes())
            .zip(self.grid.centers())
            .filter(|(_, &c)| c > r)
            .map(|((v, w), _)| v * w)
            .sum()
    }

    /// Multiply all values so that the total mass is exactly `mass`.
    pub fn renormalize_mass(&mut self, mass: f64) -> Result<()> {
        let m = self.mass();
        if m <= 0.0 {
            return Err(Error::ZeroProfile);
        }
        let s = mass / m;
        for v in &mut self.values {
            *v *= s;
        }
        Ok(())
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid.as_ref() == other.grid.as_ref() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Chemical concentration v and its radial derivative for one source species.
///
/// `v` lives at cell centers, `dv` at the n+1 cell interfaces (dv[0] = 0 at
/// the origin). For a nonnegative source dv <= 0 everywhere.
#[derive(Debug, Clone)]
pub struct PotentialProfile {
    pub grid: Arc<RadialGrid>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
}

/// Solve -Laplace(v) = u radially: v'(r) = -m(r)/(sigma r^{d-1}) with m the
/// enclosed mass, integrated inward from the exact monopole far field
/// v(r_max) = c_d M / r_max^{d-2}.
pub fn newtonian_potential(u: &RadialDensity) -> PotentialProfile {
    let g = &u.grid;
    let n = g.n;
    let dm1 = g.d as i32 - 1;

    // Enclosed mass at each interface.
    let mut enclosed = vec![0.0; n + 1];
    for k in 0..n {
        enclosed[k + 1] = enclosed[k] + u.values[k] * g.volumes()[k];
    }
    let total = enclosed[n];

    let mut dv = vec![0.0; n + 1];
    for i in 1..=n {
        let r = g.interface(i);
        dv[i] = -enclosed[i] / (g.sigma * r.powi(dm1));
    }

    let mut v = vec![0.0; n];
    let far = g.c_d * total / g.r_max().powi(g.d as i32 - 2);
    // Half step from r_max to the last center: use the slope interpolated at
    // the midpoint (n - 1/4) dr to keep the quadrature second order.
    v[n - 1] = far - 0.5 * g.dr * (0.75 * dv[n] + 0.25 * dv[n - 1]);
    for k in (0..n - 1).rev() {
        v[k] = v[k + 1] - g.dr * dv[k + 1];
    }

    PotentialProfile { grid: Arc::clone(g), v, dv }
}

/// Cross-attraction energy H[h1, h2] = iint h1(x) h2(y) / |x-y|^{d-2}.
///
/// Computed through the radial potential in O(n); discretely symmetric in
/// (h1, h2) because the induced kernel depends only on max(r_k, r_j).
pub fn interaction_energy(h1: &RadialDensity, h2: &RadialDensity) -> Result<f64> {
    h1.same_grid(h2)?;
    let g = &h1.grid;
    let v2 = newtonian_potential(h2);
    let h = h1
        .values
        .iter()
        .zip(&v2.v)
        .zip(g.volumes())
        .map(|((u, v), w)| u * v * w)
        .sum::<f64>()
        / g.c_d;
    Ok(h)
}

/// All functionals of a species pair at one time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyReport {
    pub mass1: f64,
    pub mass2: f64,
    /// ||u1||_{m1}^{m1}
    pub lm1: f64,
    /// ||u2||_{m2}^{m2}
    pub lm2: f64,
    /// Interaction energy H[u1, u2].
    pub interaction: f64,
    /// Free energy F = lm1/(m1-1) + lm2/(m2-1) - c_d H.
    pub free_energy: f64,
    /// Dissipation D; absent for states where gradients are unreliable.
    pub dissipation: Option<f64>,
    /// Total second moment S = sum_i int |x|^2 u_i.
    pub second_moment: f64,
    /// Virial rate I = 2(d-2) F + 2d sum_i (m_i - 2 + 2/d)/(m_i - 1) lm_i.
    pub virial_rate: f64,
}

pub fn free_energy(u1: &RadialDensity, u2: &RadialDensity, params: &Parameters) -> Result<EnergyReport> {
    u1.same_grid(u2)?;
    let lm1 = u1.lp_norm_pow(params.m1);
    let lm2 = u2.lp_norm_pow(params.m2);
    let h = interaction_energy(u1, u2)?;
    let f = lm1 / (params.m1 - 1.0) + lm2 / (params.m2 - 1.0) - params.c_d * h;
    let s = second_moment(u1, u2)?;
    let d = params.dim();
    let i = 2.0 * (d - 2.0) * f
        + 2.0 * d
            * ((params.m1 - 2.0 + 2.0 / d) / (params.m1 - 1.0) * lm1
                + (params.m2 - 2.0 + 2.0 / d) / (params.m2 - 1.0) * lm2);
    Ok(EnergyReport {
        mass1: u1.mass(),
        mass2: u2.mass(),
        lm1,
        lm2,
        interaction: h,
        free_energy: f,
        dissipation: None,
        second_moment: s,
        virial_rate: i,
    })
}

/// Discrete dissipation
/// D = sum_i int u_i | m_i/(m_i-1) grad u_i^{m_i-1} - grad v_j |^2,
/// with interface-centered differences; cells below the support cutoff
/// contribute zero.
pub fn dissipation(u1: &RadialDensity, u2: &RadialDensity, params: &Parameters) -> Result<f64> {
    u1.same_grid(u2)?;
    let v1 = newtonian_potential(u1);
    let v2 = newtonian_potential(u2);
    Ok(species_dissipation(u1, &v2, params.m1) + species_dissipation(u2, &v1, params.m2))
}

fn species_dissipation(u: &RadialDensity, v_other: &PotentialProfile, m: f64) -> f64 {
    let g = &u.grid;
    let cutoff = SUPPORT_CUTOFF * u.linf();
    let mut total = 0.0;
    for i in 1..g.n {
        let lo = u.values[i - 1];
        let hi = u.values[i];
        let u_face = 0.5 * (lo + hi);
        if u_face <= cutoff {
            continue;
        }
        let grad_pressure = (hi.powf(m - 1.0) - lo.powf(m - 1.0)) / g.dr;
        let term = m / (m - 1.0) * grad_pressure - v_other.dv[i];
        total += u_face * term * term * g.interface_area(i) * g.dr;
    }
    total
}

/// S[u1, u2] = sum_i sum_k r_k^2 u_{i,k} w_k.
pub fn second_moment(u1: &RadialDensity, u2: &RadialDensity) -> Result<f64> {
    u1.same_grid(u2)?;
    let g = &u1.grid;
    let one = |u: &RadialDensity| -> f64 {
        u.values
            .iter()
            .zip(g.centers())
            .zip(g.volumes())
            .map(|((v, r), w)| r * r * v * w)
            .sum()
    };
    Ok(one(u1) + one(u2))
}

/// I = 2(d-2) F + 2d sum_i (m_i-2+2/d)/(m_i-1) ||u_i||_{m_i}^{m_i}.
pub fn virial_rate(u1: &RadialDensity, u2: &RadialDensity, params: &Parameters) -> Result<f64> {
    Ok(free_energy(u1, u2, params)?.virial_rate)
}
