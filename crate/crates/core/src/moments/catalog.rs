//! Built-in weights and the `name:key=value,...` parameter syntax.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use statrs::function::gamma::ln_gamma;

use super::cubature;
use super::univariate::{jacobi_functional, laguerre_functional};
use super::{krall_jacobi_functional, krall_laguerre_functional, MomentFunctional};
use crate::error::{Error, Result};
use crate::indexing::MultiIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChebyshevKind {
    First,
    Second,
    Third,
    Fourth,
}

impl ChebyshevKind {
    pub fn from_number(k: u32) -> Result<Self> {
        Ok(match k {
            1 => Self::First,
            2 => Self::Second,
            3 => Self::Third,
            4 => Self::Fourth,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "Chebyshev kind must be 1..4, got {k}"
                )))
            }
        })
    }

    pub fn number(self) -> u32 {
        match self {
            Self::First => 1,
            Self::Second => 2,
            Self::Third => 3,
            Self::Fourth => 4,
        }
    }

    /// Jacobi parameters `(a, b)` of the weight `(1-x)^a (1+x)^b`.
    pub fn jacobi_params(self) -> (f64, f64) {
        match self {
            Self::First => (-0.5, -0.5),
            Self::Second => (0.5, 0.5),
            Self::Third => (0.5, -0.5),
            Self::Fourth => (-0.5, 0.5),
        }
    }

    /// The normalized univariate Chebyshev functional.
    pub fn functional(self) -> MomentFunctional {
        let (a, b) = self.jacobi_params();
        jacobi_1d(a, b)
            .and_then(|u| u.normalized())
            .expect("Chebyshev parameters are admissible")
            .with_label(format!("chebyshev{}", self.number()))
    }
}

/// `(1-x)^a (1+x)^b` on `[-1, 1]`, unnormalized.
pub fn jacobi_1d(a: f64, b: f64) -> Result<MomentFunctional> {
    jacobi_functional(a, b)
}

/// `t^a e^{-t}` on `[0, ∞)`, unnormalized.
pub fn laguerre_1d(a: f64) -> Result<MomentFunctional> {
    laguerre_functional(a)
}

/// Product of `d` normalized Chebyshev weights of one kind.
pub fn product_chebyshev(kind: ChebyshevKind, dim: usize) -> MomentFunctional {
    let w = kind.functional();
    MomentFunctional::tensor(&vec![w; dim])
        .with_label(format!("product-chebyshev{}(d={dim})", kind.number()))
}

/// The weight `(u² - 4v)^{-1/2} w(x) w(y)` in the variables `u = x + y`,
/// `v = xy`, for a normalized univariate functional `w`.
///
/// Since `du dv = |x - y| dx dy` and the map is two-to-one,
/// `⟨·, u^j v^k⟩` is proportional to `∬ (x+y)^j (xy)^k w(x) w(y)`. The
/// constant is chosen so that `⟨·, 1⟩ = 1`.
pub fn koornwinder_symmetric(w: &MomentFunctional) -> Result<MomentFunctional> {
    if w.dim() != 1 {
        return Err(Error::InvalidParameter(
            "symmetrized weight needs a univariate functional".into(),
        ));
    }
    let w = w.normalized()?;
    let label = format!("koornwinder-sym[{}]", w.label());
    Ok(MomentFunctional::new(2, label, move |nu| {
        let (j, k) = (nu[0] as usize, nu[1]);
        let m = |e: u32| w.moment(&MultiIndex::new(vec![e]));
        let mut binom = 1.0;
        let mut acc = 0.0;
        for l in 0..=j {
            acc += binom * m(l as u32 + k) * m((j - l) as u32 + k);
            binom = binom * (j - l) as f64 / (l + 1) as f64;
        }
        acc
    }))
}

/// `∫_{B²} x^p y^q (1 - x² - y²)^μ dx dy`.
pub fn disk_moment_closed_form(mu: f64, p: u32, q: u32) -> f64 {
    if p % 2 == 1 || q % 2 == 1 {
        return 0.0;
    }
    let (p, q) = (p as f64, q as f64);
    (ln_gamma((p + 1.0) / 2.0) + ln_gamma((q + 1.0) / 2.0) + ln_gamma(mu + 1.0)
        - ln_gamma((p + q) / 2.0 + mu + 2.0))
    .exp()
}

/// `(1 - x² - y²)^μ` on the unit disk, normalized to unit mass.
pub fn disk(mu: f64) -> Result<MomentFunctional> {
    if !(mu > -1.0) {
        return Err(Error::InvalidParameter(format!("disk needs μ > -1, got {mu}")));
    }
    let norm = disk_moment_closed_form(mu, 0, 0);
    let u = MomentFunctional::new(2, format!("disk(mu={mu})"), move |nu| {
        disk_moment_closed_form(mu, nu[0], nu[1]) / norm
    });
    Ok(with_rule(u, move |k| cubature::disk_cubature(mu, k / 2 + 1, k + 1)))
}

/// Attaches a product rule, rescaled to the mass of `u`.
fn with_rule(
    u: MomentFunctional,
    rule: impl Fn(usize) -> Result<cubature::Cubature> + Send + Sync + 'static,
) -> MomentFunctional {
    let mass = u.mass();
    u.with_cubature(move |k| {
        let mut c = rule(k).ok()?;
        let s = mass / c.weights.iter().sum::<f64>();
        c.weights.iter_mut().for_each(|w| *w *= s);
        Some(c)
    })
}

/// `∫_{T^d} x^α x_1^{κ_1-1/2} ⋯ x_d^{κ_d-1/2} (1-|x|)^{κ_{d+1}-1/2} dx`
/// as a Dirichlet integral.
pub fn simplex_moment_closed_form(kappa: &[f64], alpha: &[u32]) -> f64 {
    assert_eq!(kappa.len(), alpha.len() + 1);
    let d = alpha.len();
    let mut log = ln_gamma(kappa[d] + 0.5);
    let mut total = kappa[d] + 0.5;
    for (k, &a) in kappa.iter().zip(alpha) {
        log += ln_gamma(a as f64 + k + 0.5);
        total += a as f64 + k + 0.5;
    }
    (log - ln_gamma(total)).exp()
}

/// The simplex weight with parameters `κ = (κ_1, …, κ_{d+1})`, normalized
/// to unit mass.
pub fn simplex(kappa: &[f64]) -> Result<MomentFunctional> {
    if kappa.len() < 2 {
        return Err(Error::InvalidParameter(
            "simplex needs d+1 ≥ 2 parameters".into(),
        ));
    }
    if let Some(bad) = kappa.iter().find(|&&k| !(k > -0.5)) {
        return Err(Error::InvalidParameter(format!(
            "simplex parameters must exceed -1/2, got {bad}"
        )));
    }
    let kappa = kappa.to_vec();
    let d = kappa.len() - 1;
    let norm = simplex_moment_closed_form(&kappa, &vec![0; d]);
    let label = format!("simplex(k={kappa:?})");
    let k2 = kappa.clone();
    let u = MomentFunctional::new(d, label, move |nu| {
        simplex_moment_closed_form(&kappa, nu.as_slice()) / norm
    });
    Ok(with_rule(u, move |k| cubature::simplex_cubature(&k2, k / 2 + 1)))
}

/// `∏ (1-x_i)^{a_i} (1+x_i)^{b_i}` on the cube, unnormalized.
pub fn multi_jacobi(a: &[f64], b: &[f64]) -> Result<MomentFunctional> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidParameter(
            "multiple Jacobi needs equally long, nonempty a and b".into(),
        ));
    }
    let factors = a
        .iter()
        .zip(b)
        .map(|(&a, &b)| jacobi_1d(a, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentFunctional::tensor(&factors).with_label(format!("cube(a={a:?},b={b:?})")))
}

/// `x^κ e^{-|x|_1}` on `ℝ^d_+`, unnormalized.
pub fn multi_laguerre(kappa: &[f64]) -> Result<MomentFunctional> {
    if kappa.is_empty() {
        return Err(Error::InvalidParameter("multiple Laguerre needs d ≥ 1".into()));
    }
    let factors = kappa
        .iter()
        .map(|&k| laguerre_1d(k))
        .collect::<Result<Vec<_>>>()?;
    let u = MomentFunctional::tensor(&factors).with_label(format!("laguerre(k={kappa:?})"));
    let kappa = kappa.to_vec();
    Ok(with_rule(u, move |k| cubature::laguerre_cubature(&kappa, k / 2 + 1)))
}

/// A family name with numeric parameters, written
/// `name:key=v1,v2,key2=v3`. A token without `=` extends the previous key.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FamilySpec {
    pub name: String,
    pub params: BTreeMap<String, Vec<f64>>,
}

impl FamilySpec {
    pub fn new(name: impl Into<String>) -> Self {
        FamilySpec {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, values: &[f64]) -> Self {
        self.params.insert(key.to_string(), values.to_vec());
        self
    }

    pub fn values(&self, key: &str) -> Option<&[f64]> {
        self.params.get(key).map(Vec::as_slice)
    }

    pub fn scalar(&self, key: &str) -> Result<f64> {
        match self.values(key) {
            Some([v]) => Ok(*v),
            Some(v) => Err(Error::Parse(format!(
                "parameter `{key}` of `{}` expects one value, got {}",
                self.name,
                v.len()
            ))),
            None => Err(Error::Parse(format!(
                "family `{}` requires parameter `{key}`",
                self.name
            ))),
        }
    }

    pub fn scalar_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.params.contains_key(key) {
            self.scalar(key)
        } else {
            Ok(default)
        }
    }

    pub fn vector(&self, key: &str) -> Result<&[f64]> {
        self.values(key).ok_or_else(|| {
            Error::Parse(format!("family `{}` requires parameter `{key}`", self.name))
        })
    }

    /// The weight this specification names.
    pub fn functional(&self) -> Result<MomentFunctional> {
        match self.name.as_str() {
            "jacobi" => jacobi_1d(self.scalar("a")?, self.scalar("b")?),
            "laguerre" | "multi-laguerre" => multi_laguerre(self.vector("k")?),
            "cheb" | "chebyshev" => {
                let kind = ChebyshevKind::from_number(self.scalar("kind")? as u32)?;
                let d = self.scalar_or("d", 2.0)? as usize;
                Ok(product_chebyshev(kind, d))
            }
            "cheb-koornwinder" => {
                let kind = ChebyshevKind::from_number(self.scalar("kind")? as u32)?;
                koornwinder_symmetric(&kind.functional())
            }
            "disk" => disk(self.scalar("mu")?),
            "simplex" => simplex(self.vector("k")?),
            "cube" | "multi-jacobi" => multi_jacobi(self.vector("a")?, self.vector("b")?),
            "krall-laguerre" => {
                let v = krall_laguerre_functional(self.scalar("alpha")?, self.scalar("a1")?)?;
                let w = jacobi_1d(0.0, 0.0)?;
                Ok(MomentFunctional::tensor(&[v, w]))
            }
            "krall-jacobi" => {
                let v = krall_jacobi_functional(
                    self.scalar("alpha")?,
                    self.scalar("beta")?,
                    self.scalar("a1")?,
                )?;
                let w = jacobi_1d(0.0, 0.0)?;
                Ok(MomentFunctional::tensor(&[v, w]))
            }
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim(), r),
            None => (s.trim(), ""),
        };
        if name.is_empty() {
            return Err(Error::Parse(format!("missing family name in `{s}`")));
        }
        let mut spec = FamilySpec::new(name);
        let mut current: Option<String> = None;
        for token in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (key, value) = match token.split_once('=') {
                Some((k, v)) => (k.trim().to_string(), v.trim()),
                None => match &current {
                    Some(k) => (k.clone(), token),
                    None => {
                        return Err(Error::Parse(format!(
                            "value `{token}` in `{s}` has no parameter name"
                        )))
                    }
                },
            };
            let v: f64 = value
                .parse()
                .map_err(|e| Error::Parse(format!("bad value `{value}` for `{key}`: {e}")))?;
            spec.params.entry(key.clone()).or_default().push(v);
            current = Some(key);
        }
        Ok(spec)
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        let parts: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| {
                let vals: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
                format!("{k}={}", vals.join(","))
            })
            .collect();
        if !parts.is_empty() {
            write!(f, ":{}", parts.join(","))?;
        }
        Ok(())
    }
}
