//! Weighted particles, their sampling and the particle-to-grid couplings.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{PicError, Result};
use crate::scalar::Real;
use crate::splines::{Form, SplineSpace};

/// Particles per chunk in every particle loop. Partial results are reduced
/// chunk by chunk in index order, so serial and parallel runs agree bitwise.
pub const CHUNK: usize = 4096;

/// One particle species stored as structure of arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct Species<T> {
    pub name: String,
    pub charge: T,
    pub mass: T,
    pub x: Vec<T>,
    pub v1: Vec<T>,
    pub v2: Vec<T>,
    pub w: Vec<T>,
}

impl<T: Real> Species<T> {
    pub fn new(name: impl Into<String>, charge: T, mass: T) -> Self {
        Self {
            name: name.into(),
            charge,
            mass,
            x: Vec::new(),
            v1: Vec::new(),
            v2: Vec::new(),
            w: Vec::new(),
        }
    }

    pub fn push(&mut self, x: T, v1: T, v2: T, w: T) {
        self.x.push(x);
        self.v1.push(v1);
        self.v2.push(v2);
        self.w.push(w);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn q_over_m(&self) -> T {
        self.charge / self.mass
    }

    /// `Σ q w`.
    pub fn total_charge(&self) -> T {
        self.charge * self.w.iter().copied().sum::<T>()
    }

    pub fn kinetic_energy(&self) -> T {
        let e: T = self
            .w
            .iter()
            .zip(self.v1.iter().zip(&self.v2))
            .map(|(&w, (&a, &b))| w * (a * a + b * b))
            .sum();
        T::lit(0.5) * self.mass * e
    }

    /// Mutable views of consecutive particle chunks.
    pub fn chunks_mut(&mut self) -> Vec<ParticleChunk<'_, T>> {
        self.x
            .chunks_mut(CHUNK)
            .zip(self.v1.chunks_mut(CHUNK))
            .zip(self.v2.chunks_mut(CHUNK))
            .zip(self.w.chunks(CHUNK))
            .enumerate()
            .map(|(i, (((x, v1), v2), w))| ParticleChunk {
                offset: i * CHUNK,
                x,
                v1,
                v2,
                w,
            })
            .collect()
    }
}

/// Mutable slice of a species starting at particle `offset`.
pub struct ParticleChunk<'a, T> {
    pub offset: usize,
    pub x: &'a mut [T],
    pub v1: &'a mut [T],
    pub v2: &'a mut [T],
    pub w: &'a [T],
}

/// Runs `f` on every chunk of `species` with a fresh accumulator from `init`
/// and returns the accumulators in chunk order.
pub fn sweep_chunks<T, A, I, F>(species: &mut Species<T>, parallel: bool, init: I, f: F) -> Vec<A>
where
    T: Real,
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut ParticleChunk<'_, T>, &mut A) + Sync,
{
    let chunks = species.chunks_mut();
    let run = |mut c: ParticleChunk<'_, T>| {
        let mut acc = init();
        f(&mut c, &mut acc);
        acc
    };
    if parallel {
        chunks.into_par_iter().map(run).collect()
    } else {
        chunks.into_iter().map(run).collect()
    }
}

/// Read-only variant of [`sweep_chunks`] producing dense dof vectors that
/// are summed in chunk order.
pub fn accumulate_chunks<T, F>(len: usize, n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Real,
    F: Fn(std::ops::Range<usize>, &mut [T]) + Sync,
{
    let n_chunks = len.div_ceil(CHUNK);
    let run = |c: usize| {
        let mut acc = vec![T::zero(); n];
        f(c * CHUNK..((c + 1) * CHUNK).min(len), &mut acc);
        acc
    };
    let partials: Vec<Vec<T>> = if parallel {
        (0..n_chunks).into_par_iter().map(run).collect()
    } else {
        (0..n_chunks).map(run).collect()
    };
    reduce_in_order(partials, n)
}

pub(crate) fn reduce_in_order<T: Real>(partials: Vec<Vec<T>>, n: usize) -> Vec<T> {
    let mut total = vec![T::zero(); n];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Spatial density shape `1 + α cos(k x)` normalized to mean one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpatialProfile<T> {
    Uniform,
    Cosine { amplitude: T, wavenumber: T },
}

/// One Gaussian of a velocity mixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianComponent<T> {
    pub weight: T,
    pub mean: T,
    pub sigma: T,
}

/// Velocity distribution along one axis as a mixture of Gaussians.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityProfile<T> {
    pub components: Vec<GaussianComponent<T>>,
}

impl<T: Real> VelocityProfile<T> {
    pub fn maxwellian(sigma: T) -> Self {
        Self {
            components: vec![GaussianComponent {
                weight: T::one(),
                mean: T::zero(),
                sigma,
            }],
        }
    }

    /// Equal-weight pair of unit-free beams at `±drift`.
    pub fn counter_streams(drift: T, sigma: T) -> Self {
        let half = T::lit(0.5);
        Self {
            components: vec![
                GaussianComponent {
                    weight: half,
                    mean: drift,
                    sigma,
                },
                GaussianComponent {
                    weight: half,
                    mean: -drift,
                    sigma,
                },
            ],
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> T {
        let total: T = self.components.iter().map(|c| c.weight).sum();
        let u = T::lit(rng.random::<f64>()) * total;
        let mut acc = T::zero();
        let mut chosen = self.components.last().expect("non-empty mixture");
        for c in &self.components {
            acc += c.weight;
            if u < acc {
                chosen = c;
                break;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        chosen.mean + chosen.sigma * T::lit(z)
    }
}

/// Parameters needed to sample one species on `[0, length)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesParams<T> {
    pub name: String,
    pub charge: T,
    pub mass: T,
    /// Mean number density; weights are `density · length / n_p`.
    pub density: T,
    pub spatial: SpatialProfile<T>,
    pub v1: VelocityProfile<T>,
    pub v2: VelocityProfile<T>,
}

/// Samples `n_p` particles from a seeded ChaCha stream.
///
/// Positions come from inverse-CDF sampling of the spatial profile,
/// velocities from the Gaussian mixtures. `stream` separates species that
/// share one seed.
pub fn sample_species<T: Real>(
    params: &SpeciesParams<T>,
    length: T,
    n_p: usize,
    seed: u64,
    stream: u64,
) -> Result<Species<T>> {
    if n_p == 0 {
        return Err(PicError::InvalidConfig("particle count must be positive".into()));
    }
    if !(params.mass > T::zero()) || !(params.density > T::zero()) {
        return Err(PicError::InvalidConfig(format!(
            "species `{}` needs positive mass and density",
            params.name
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let w = params.density * length / T::from_count(n_p);
    let mut sp = Species::new(params.name.clone(), params.charge, params.mass);
    sp.x.reserve(n_p);
    sp.v1.reserve(n_p);
    sp.v2.reserve(n_p);
    sp.w.reserve(n_p);
    for _ in 0..n_p {
        let u = T::lit(rng.random::<f64>());
        let x = sample_position(params.spatial, length, u);
        let v1 = params.v1.sample(&mut rng);
        let v2 = params.v2.sample(&mut rng);
        sp.push(x, v1, v2, w);
    }
    Ok(sp)
}

/// Inverts `F(x) = (x + (α/k) sin(k x)) / L` by safeguarded Newton iteration.
fn sample_position<T: Real>(profile: SpatialProfile<T>, length: T, u: T) -> T {
    let target = u * length;
    match profile {
        SpatialProfile::Uniform => target,
        SpatialProfile::Cosine { amplitude, wavenumber } => {
            let (a, k) = (amplitude, wavenumber);
            let mut x = target;
            let (mut lo, mut hi) = (T::zero(), length);
            for _ in 0..60 {
                let g = x + a / k * (k * x).sin() - target;
                if g > T::zero() {
                    hi = x;
                } else {
                    lo = x;
                }
                let dg = T::one() + a * (k * x).cos();
                let mut next = x - g / dg;
                if !(next > lo && next < hi) {
                    next = T::lit(0.5) * (lo + hi);
                }
                if (next - x).abs() <= T::epsilon() * length {
                    x = next;
                    break;
                }
                x = next;
            }
            x.max(T::zero()).min(length - length * T::epsilon())
        }
    }
}

/// `ρ_i = Σ_s q_s Σ_a w_a Λ⁰_i(x_a)`, species summed in slice order.
pub fn deposit_charge<T: Real>(space: &SplineSpace<T>, species: &[Species<T>], parallel: bool) -> Vec<T> {
    let n = space.n_cells();
    let mut rho = vec![T::zero(); n];
    for sp in species {
        let part = accumulate_chunks(sp.len(), n, parallel, |range, acc| {
            for a in range {
                space
                    .basis_values(Form::Zero, sp.x[a])
                    .scatter(sp.charge * sp.w[a], acc);
            }
        });
        for (r, v) in rho.iter_mut().zip(part) {
            *r += v;
        }
    }
    rho
}

/// Point-deposited current `j_i = Σ q w v_c Λ_i(x)`; component 1 uses the
/// 1-form space, component 2 the 0-form space.
pub fn deposit_current_point<T: Real>(
    space: &SplineSpace<T>,
    species: &Species<T>,
    component: usize,
    parallel: bool,
) -> Vec<T> {
    let (form, v) = match component {
        1 => (Form::One, &species.v1),
        2 => (Form::Zero, &species.v2),
        _ => panic!("current component must be 1 or 2, got {component}"),
    };
    accumulate_chunks(species.len(), space.n_cells(), parallel, |range, acc| {
        for a in range {
            space
                .basis_values(form, species.x[a])
                .scatter(species.charge * species.w[a] * v[a], acc);
        }
    })
}

/// Kinetic energy `½ Σ m w |v|²` over all species.
pub fn kinetic_energy<T: Real>(species: &[Species<T>]) -> T {
    species.iter().map(|s| s.kinetic_energy()).sum()
}

/// Symmetric banded matrix `N_jk = c Σ_a (q² w_a / m) Λ_j(x_a) Λ_k(x_a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledMassMatrix<T> {
    n: usize,
    half_band: usize,
    /// Row-major band: entry `(i, o)` is `N[i, i + o - half_band]`.
    band: Vec<T>,
}

impl<T: Real> SampledMassMatrix<T> {
    pub fn zeros(n: usize, half_band: usize) -> Self {
        Self {
            n,
            half_band,
            band: vec![T::zero(); n * (2 * half_band + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_band(&self) -> usize {
        self.half_band
    }

    fn width(&self) -> usize {
        2 * self.half_band + 1
    }

    /// Entry `N[i, (i + offset) mod n]`; zero outside the band.
    pub fn get(&self, i: usize, offset: isize) -> T {
        let o = offset + self.half_band as isize;
        if o < 0 || o as usize >= self.width() {
            return T::zero();
        }
        self.band[i * self.width() + o as usize]
    }

    /// Adds `scale · vvᵀ` for the local basis vector `values` starting at `first_dof`.
    pub fn add_outer(&mut self, first_dof: usize, values: &[T], scale: T) {
        let w = self.width();
        for (a, &va) in values.iter().enumerate() {
            let row = (first_dof + a) % self.n;
            let sva = scale * va;
            for (b, &vb) in values.iter().enumerate() {
                let o = b + self.half_band - a;
                self.band[row * w + o] += sva * vb;
            }
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.n, other.n);
        assert_eq!(self.half_band, other.half_band);
        for (a, &b) in self.band.iter_mut().zip(&other.band) {
            *a += b;
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[T], y: &mut [T]) {
        let w = self.width();
        let n = self.n;
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.band[i * w..(i + 1) * w];
            let mut idx = (i + n - self.half_band) % n;
            let mut s = T::zero();
            for &c in row {
                s += c * x[idx];
                idx += 1;
                if idx == n {
                    idx = 0;
                }
            }
            *yi = s;
        }
    }

    pub fn quadratic_form(&self, x: &[T]) -> T {
        crate::scalar::dot(x, &self.apply(x))
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut a = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in a.iter_mut().enumerate() {
            for o in 0..self.width() {
                let col = (i + self.n + o - self.half_band) % self.n;
                row[col] += self.band[i * self.width() + o];
            }
        }
        a
    }

    pub fn is_zero(&self) -> bool {
        self.band.iter().all(|&v| v == T::zero())
    }
}

/// Particle-sampled mass matrix `(dt²/4) Σ_a (q² w_a / m) Λ(x_a) Λ(x_a)ᵀ` in
/// the given form space.
pub fn sampled_mass<T: Real>(
    space: &SplineSpace<T>,
    species: &[Species<T>],
    form: Form,
    dt: T,
    parallel: bool,
) -> SampledMassMatrix<T> {
    let n = space.n_cells();
    let hb = space.form_degree(form);
    let mut total = SampledMassMatrix::zeros(n, hb);
    let quarter_dt2 = dt * dt / T::lit(4.0);
    for sp in species {
        let coef = quarter_dt2 * sp.charge * sp.charge / sp.mass;
        let n_chunks = sp.len().div_ceil(CHUNK);
        let run = |c: usize| {
            let mut acc = SampledMassMatrix::zeros(n, hb);
            for a in c * CHUNK..((c + 1) * CHUNK).min(sp.len()) {
                let bv = space.basis_values(form, sp.x[a]);
                acc.add_outer(bv.first_dof, &bv.values, coef * sp.w[a]);
            }
            acc
        };
        let partials: Vec<SampledMassMatrix<T>> = if parallel {
            (0..n_chunks).into_par_iter().map(run).collect()
        } else {
            (0..n_chunks).map(run).collect()
        };
        for p in &partials {
            total.add_assign(p);
        }
    }
    total
}

/// Writes a CSV dump with header `x,v1,v2,w` (one row per particle).
pub fn write_particle_dump<T: Real>(species: &Species<T>, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,v1,v2,w")?;
    for a in 0..species.len() {
        writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e}",
            species.x[a].to_f64_lossy(),
            species.v1[a].to_f64_lossy(),
            species.v2[a].to_f64_lossy(),
            species.w[a].to_f64_lossy()
        )?;
    }
    out.flush()?;
    Ok(())
}
