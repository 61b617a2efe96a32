use super::BoundInputs;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// The two tails of the miss-probability bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissTerms<T> {
    /// Bound on `P{φ₁ > Nε + (N−K)σ_n²}`.
    pub upper: T,
    /// Bound on `P{φ₁ < −Nε + (N−K)σ_n²}`; zero when that event is impossible.
    pub lower: T,
    /// Set when `ε ≥ σ_n'²`, so the lower event cannot occur and `lower` is 0.
    pub lower_tail_impossible: bool,
}

impl<T: Real> MissTerms<T> {
    pub fn total(&self) -> T {
        self.upper + self.lower
    }
}

pub fn chernoff_miss_terms<T: Real>(b: &BoundInputs<T>) -> MissTerms<T> {
    let half_dof = b.dof() / T::of(2.0);
    if b.sigma_prime_sq == T::zero() {
        // Noiseless: φ₁ = 0 almost surely, and |0 − 0| < ε always.
        return MissTerms { upper: T::zero(), lower: T::zero(), lower_tail_impossible: true };
    }
    let x = b.eps / b.sigma_prime_sq;
    let upper = (-half_dof * (x - x.ln_1p())).exp();
    if x >= T::one() {
        return MissTerms { upper, lower: T::zero(), lower_tail_impossible: true };
    }
    let lower = (-half_dof * (-x - (-x).ln_1p())).exp();
    MissTerms { upper, lower, lower_tail_impossible: false }
}

/// Upper bound on `P{τ is not typical}`.
pub fn chernoff_miss_bound<T: Real>(b: &BoundInputs<T>) -> T {
    chernoff_miss_terms(b).total()
}

fn pos_sigma<T: Real>(b: &BoundInputs<T>) -> Result<()> {
    if b.sigma_n_sq > T::zero() {
        Ok(())
    } else {
        Err(Error::Precondition("sigma_n_sq must be > 0 for this bound".into()))
    }
}

/// `ln g(ν)` with `Σ m_i² = Nγ²`.
pub fn ln_g_of_nu<T: Real>(nu: T, b: &BoundInputs<T>) -> Result<T> {
    let gamma_sq = b.gamma_sq()?;
    let x = T::one() - T::of(2.0) * nu * b.sigma_n_sq;
    if !(x > T::zero()) {
        return Err(Error::Precondition(format!("need 1 - 2 nu sigma_n^2 > 0, got {x}")));
    }
    let nf = T::of_usize(b.n);
    let dof = b.dof();
    let eps_bar = b.eps_bar()?;
    Ok(-dof / T::of(2.0) * x.ln() + nu * nf * gamma_sq / x - nu * (dof * b.sigma_n_sq + nf * gamma_sq - nf * eps_bar))
}

pub fn g_of_nu<T: Real>(nu: T, b: &BoundInputs<T>) -> Result<T> {
    Ok(ln_g_of_nu(nu, b)?.exp())
}

/// Which noise variance scales the denominator of the stationary point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NuScale {
    /// `4σ_n²(γ² − ε̄ + σ_n'²)`: the true minimiser of `g`.
    NoiseVariance,
    /// `4σ_n'²(γ² − ε̄ + σ_n'²)`.
    ReducedNoiseVariance,
}

impl NuScale {
    pub fn name(self) -> &'static str {
        match self {
            NuScale::NoiseVariance => "sigma_n_sq",
            NuScale::ReducedNoiseVariance => "sigma_prime_sq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuStar<T> {
    pub nu: T,
    pub g_min: T,
    /// The closed form of `g(ν*)`, evaluated independently of `g_of_nu`.
    pub g_closed_form: T,
}

struct Stationary<T> {
    s: T,
    sqrt_d: T,
    gamma_sq: T,
    eps_bar: T,
}

fn stationary<T: Real>(b: &BoundInputs<T>) -> Result<Stationary<T>> {
    pos_sigma(b)?;
    let gamma_sq = b.gamma_sq()?;
    let eps_bar = b.eps_bar()?;
    if !(gamma_sq > T::zero()) {
        return Err(Error::Precondition("gamma_sq must be > 0".into()));
    }
    if !(eps_bar > T::zero()) {
        return Err(Error::Precondition(format!("need eps < gamma_sq (eps={}, gamma_sq={gamma_sq})", b.eps)));
    }
    let sp = b.sigma_prime_sq;
    let four = T::of(4.0);
    // (σ'² + 2γ²)² − 4γ²ε̄, expanded so that no terms cancel.
    let d = sp * sp + four * sp * gamma_sq + four * gamma_sq * b.eps;
    Ok(Stationary { s: sp + T::of(2.0) * gamma_sq, sqrt_d: d.sqrt(), gamma_sq, eps_bar })
}

/// Minimiser of `g` over `ν < 1/(2σ_n²)`.
pub fn nu_star<T: Real>(b: &BoundInputs<T>) -> Result<NuStar<T>> {
    nu_star_with(b, NuScale::NoiseVariance)
}

pub fn nu_star_with<T: Real>(b: &BoundInputs<T>, scale: NuScale) -> Result<NuStar<T>> {
    let st = stationary(b)?;
    // Rationalised: the numerator 2γ² − 2ε̄ + σ'² − √D equals
    // −4ε̄(σ'² + γ² − ε̄) / (σ'² + 2γ² − 2ε̄ + √D).
    let two = T::of(2.0);
    let core = st.eps_bar / (b.sigma_prime_sq + two * b.eps + st.sqrt_d);
    let nu = match scale {
        NuScale::NoiseVariance => -core / b.sigma_n_sq,
        NuScale::ReducedNoiseVariance => -core / b.sigma_prime_sq,
    };
    Ok(NuStar { nu, g_min: g_of_nu(nu, b)?, g_closed_form: chain_tight(b)? })
}

/// Outcome of checking both stationary-point scalings against a grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleResolution<T> {
    pub chosen: NuScale,
    pub ln_g_grid_min: T,
    pub ln_g_noise: T,
    pub ln_g_reduced: T,
}

/// Grid-minimises `ln g` on `[2ν_r, 0)`, where `ν_r` is the more negative
/// candidate, and keeps the candidate closer to the grid minimum.
pub fn resolve_nu_star_scale<T: Real>(b: &BoundInputs<T>, points: usize) -> Result<ScaleResolution<T>> {
    if points < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points".into()));
    }
    let noise = nu_star_with(b, NuScale::NoiseVariance)?.nu;
    let reduced = nu_star_with(b, NuScale::ReducedNoiseVariance)?.nu;
    let lo = T::of(2.0) * noise.min(reduced);
    let step = -lo / T::of_usize(points);
    let mut grid_min = T::infinity();
    for i in 0..points {
        grid_min = grid_min.min(ln_g_of_nu(lo + step * T::of_usize(i), b)?);
    }
    let ln_g_noise = ln_g_of_nu(noise, b)?;
    let ln_g_reduced = ln_g_of_nu(reduced, b)?;
    let chosen = if (ln_g_noise - grid_min).abs() <= (ln_g_reduced - grid_min).abs() {
        NuScale::NoiseVariance
    } else {
        NuScale::ReducedNoiseVariance
    };
    Ok(ScaleResolution { chosen, ln_g_grid_min: grid_min, ln_g_noise, ln_g_reduced })
}

/// Closed forms at the stationary point, each derived independently:
/// `1 − 2ν*σ_n²`, its reciprocal, `ν*` itself, and `γ²ν*/(1 − 2ν*σ_n²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryIdentities<T> {
    pub one_minus_two_nu_sigma: T,
    pub reciprocal: T,
    pub nu: T,
    pub gamma_nu_ratio: T,
}

pub fn stationary_identities<T: Real>(b: &BoundInputs<T>) -> Result<StationaryIdentities<T>> {
    let st = stationary(b)?;
    let (two, four) = (T::of(2.0), T::of(4.0));
    let sp = b.sigma_prime_sq;
    let denom = sp + st.gamma_sq - st.eps_bar;
    Ok(StationaryIdentities {
        one_minus_two_nu_sigma: (sp + st.sqrt_d) / (two * denom),
        reciprocal: (st.sqrt_d - sp) / (two * st.gamma_sq),
        nu: (two * st.gamma_sq - two * st.eps_bar + sp - st.sqrt_d) / (four * b.sigma_n_sq * denom),
        gamma_nu_ratio: (st.sqrt_d - sp - two * st.gamma_sq) / (four * b.sigma_n_sq),
    })
}

fn tight_with_root<T: Real>(b: &BoundInputs<T>, st: &Stationary<T>, root: T) -> T {
    let two = T::of(2.0);
    let base = (root - b.sigma_prime_sq) / (two * st.gamma_sq);
    let nf = T::of_usize(b.n);
    let expo = -nf * (st.s - st.eps_bar - root) / (two * b.sigma_n_sq);
    (b.dof() / two * base.ln() + expo).exp()
}

/// `g(ν*)` in closed form.
pub fn chain_tight<T: Real>(b: &BoundInputs<T>) -> Result<T> {
    let st = stationary(b)?;
    Ok(tight_with_root(b, &st, st.sqrt_d))
}

/// [`chain_tight`] with `√D = S√(1−x)` replaced by `S(1 − x/2)`, where
/// `S = σ_n'² + 2γ²` and `x = 4γ²ε̄/S²`.
pub fn chain_sqrt_relaxed<T: Real>(b: &BoundInputs<T>) -> Result<T> {
    let st = stationary(b)?;
    let x = T::of(4.0) * st.gamma_sq * st.eps_bar / (st.s * st.s);
    Ok(tight_with_root(b, &st, st.s * super::sqrt_one_minus_upper(x)))
}

fn chain_ratio<T: Real>(b: &BoundInputs<T>) -> Result<T> {
    let st = stationary(b)?;
    Ok(st.eps_bar / st.s)
}

/// `exp{−((N−K)/2)[−u − ln(1−u)]}` with `u = ε̄/(σ_n'² + 2γ²)`.
pub fn chain_log_form<T: Real>(b: &BoundInputs<T>) -> Result<T> {
    let u = chain_ratio(b)?;
    Ok((-b.dof() / T::of(2.0) * (-u - (-u).ln_1p())).exp())
}

/// `exp{−((N−K)/4) u²}` with `u = ε̄/(σ_n'² + 2γ²)`.
pub fn chain_quadratic<T: Real>(b: &BoundInputs<T>) -> Result<T> {
    let u = chain_ratio(b)?;
    Ok((-b.dof() / T::of(4.0) * u * u).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FalseTypicalityVariant {
    /// In terms of `γ²` for a specific matrix and off-support candidate.
    Exact,
    /// Large-`N` form in terms of `Σ_{i∈τ∖ξ}|s_i|²`.
    Asymptotic,
    /// The large-`N` form with denominator `Σ|s_i|² + σ_n²`.
    PriorWork,
}

impl FalseTypicalityVariant {
    pub const ALL: [FalseTypicalityVariant; 3] =
        [FalseTypicalityVariant::Exact, FalseTypicalityVariant::Asymptotic, FalseTypicalityVariant::PriorWork];

    pub fn name(self) -> &'static str {
        match self {
            FalseTypicalityVariant::Exact => "exact",
            FalseTypicalityVariant::Asymptotic => "asymptotic",
            FalseTypicalityVariant::PriorWork => "prior_work",
        }
    }
}

/// Upper bound on `P{ξ is typical}` for a candidate `ξ ≠ τ`.
pub fn false_typicality_bound<T: Real>(b: &BoundInputs<T>, variant: FalseTypicalityVariant) -> Result<T> {
    let two = T::of(2.0);
    let (num, den) = match variant {
        FalseTypicalityVariant::Exact => {
            let g = b.gamma_sq()?;
            (g - b.eps, b.sigma_prime_sq + two * g)
        }
        FalseTypicalityVariant::Asymptotic => {
            let e = b.off_support_energy()?;
            (e - b.eps_prime, two * e + b.sigma_n_sq)
        }
        FalseTypicalityVariant::PriorWork => {
            let e = b.off_support_energy()?;
            (e - b.eps_prime, e + b.sigma_n_sq)
        }
    };
    if num < T::zero() {
        return Err(Error::Precondition(format!("{} bound needs a nonnegative margin, got {num}", variant.name())));
    }
    if num == T::zero() {
        return Ok(T::one());
    }
    let r = num / den;
    Ok((-b.dof() / T::of(4.0) * r * r).exp())
}
