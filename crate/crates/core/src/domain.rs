//! Data model shared by every solution method.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::specfun::EvalTolerance;

/// Scattering rate `lambda` (1/time) and speed `v` (length/time).
///
/// `lambda` is the isotropic scattering rate; direction reversals happen at
/// rate `lambda / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    lambda: T,
    speed: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(lambda: T, speed: T) -> Result<Self> {
        if !(lambda.is_finite() && lambda > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "scattering rate must be finite and positive, got {lambda}"
            )));
        }
        if !(speed.is_finite() && speed > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "speed must be finite and positive, got {speed}"
            )));
        }
        Ok(Self { lambda, speed })
    }

    /// `lambda = v = 1`, the natural units of the problem.
    pub fn unit() -> Self {
        Self {
            lambda: T::one(),
            speed: T::one(),
        }
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn speed(&self) -> T {
        self.speed
    }

    pub fn reversal_rate(&self) -> T {
        self.lambda * T::half()
    }

    /// Ballistic reach `v t`.
    pub fn reach(&self, t: T) -> T {
        self.speed * t
    }

    /// Probability of no reversal up to `t`, `exp(-lambda t / 2)`.
    pub fn survival(&self, t: T) -> T {
        (-self.lambda * t * T::half()).exp()
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            lambda: U::lit(self.lambda.to_f64_lossy()),
            speed: U::lit(self.speed.to_f64_lossy()),
        }
    }
}

pub(crate) fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t.is_finite() && t > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "time must be finite and positive, got {t}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    pub fn sign<T: Real>(self) -> T {
        match self {
            Direction::Right => T::one(),
            Direction::Left => -T::one(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialCondition {
    /// Both initial directions equally likely.
    Isotropic,
    BulletRight,
    BulletLeft,
}

impl InitialCondition {
    pub fn bullet(self) -> Option<Direction> {
        match self {
            InitialCondition::Isotropic => None,
            InitialCondition::BulletRight => Some(Direction::Right),
            InitialCondition::BulletLeft => Some(Direction::Left),
        }
    }
}

impl From<Direction> for InitialCondition {
    fn from(d: Direction) -> Self {
        match d {
            Direction::Right => InitialCondition::BulletRight,
            Direction::Left => InitialCondition::BulletLeft,
        }
    }
}

/// Point mass of a [`MixedDensity`], always sitting on the front `±vt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub position: T,
    pub weight: T,
}

type Evaluator<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A law on `[-vt, vt]` made of Dirac atoms on the fronts plus an absolutely
/// continuous part, evaluated lazily point by point.
#[derive(Clone)]
pub struct MixedDensity<T> {
    t: T,
    params: ModelParams<T>,
    atoms: Vec<Atom<T>>,
    continuous: Evaluator<T>,
}

impl<T: Real> MixedDensity<T> {
    /// `continuous` is only consulted on `|x| <= vt`.
    pub fn new(
        t: T,
        params: ModelParams<T>,
        atoms: Vec<Atom<T>>,
        continuous: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Result<Self> {
        check_time(t)?;
        let reach = params.reach(t);
        for atom in &atoms {
            if atom.position.abs() != reach {
                return Err(Error::Domain(format!(
                    "atom at {} is not on the front ±{reach}",
                    atom.position
                )));
            }
            if !(atom.weight >= T::zero() && atom.weight <= T::one()) {
                return Err(Error::Domain(format!(
                    "atom weight {} outside [0, 1]",
                    atom.weight
                )));
            }
        }
        Ok(Self {
            t,
            params,
            atoms,
            continuous: Arc::new(continuous),
        })
    }

    /// Symmetric pair of atoms of weight `w / 2` at `±vt`.
    pub(crate) fn front_pair(t: T, params: &ModelParams<T>, total: T) -> Vec<Atom<T>> {
        let reach = params.reach(t);
        let w = total * T::half();
        vec![
            Atom {
                position: -reach,
                weight: w,
            },
            Atom {
                position: reach,
                weight: w,
            },
        ]
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn reach(&self) -> T {
        self.params.reach(self.t)
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    /// Continuous density at `x`; zero outside the support.
    pub fn continuous(&self, x: T) -> T {
        if x.abs() > self.reach() {
            T::zero()
        } else {
            (self.continuous)(x)
        }
    }

    pub fn atom_mass(&self) -> T {
        self.atoms.iter().fold(T::zero(), |acc, a| acc + a.weight)
    }

    /// Atom weight sitting exactly at `position`.
    pub fn atom_at(&self, position: T) -> T {
        self.atoms
            .iter()
            .filter(|a| a.position == position)
            .fold(T::zero(), |acc, a| acc + a.weight)
    }

    pub fn continuous_mass(&self, tol: T) -> Result<T> {
        let reach = self.reach();
        quadrature(|x| self.continuous(x), -reach, reach, tol)
    }

    pub fn total_mass(&self, tol: T) -> Result<T> {
        Ok(self.atom_mass() + self.continuous_mass(tol)?)
    }

    /// Right-continuous CDF evaluated at each of the increasing `points`.
    ///
    /// The atom at `-vt` enters at the left edge, the one at `+vt` at the
    /// right edge. `tol` is the quadrature tolerance per interval.
    pub fn cdf_at(&self, points: &[T], tol: T) -> Result<Vec<T>> {
        let reach = self.reach();
        let left_atom = self.atom_at(-reach);
        let right_atom = self.atom_at(reach);
        let mut out = Vec::with_capacity(points.len());
        let mut acc = T::zero();
        let mut last = -reach;
        for (i, &p) in points.iter().enumerate() {
            if i > 0 && p < points[i - 1] {
                return Err(Error::Domain("CDF points must be nondecreasing".into()));
            }
            if p < -reach {
                out.push(T::zero());
                continue;
            }
            let upper = p.min(reach);
            if upper > last {
                acc = acc + quadrature(|x| self.continuous(x), last, upper, tol)?;
                last = upper;
            }
            let mut value = left_atom + acc;
            if p >= reach {
                value = value + right_atom;
            }
            out.push(value);
        }
        Ok(out)
    }

    /// The law of `-X`.
    pub fn reflect(&self) -> Self {
        let inner = Arc::clone(&self.continuous);
        Self {
            t: self.t,
            params: self.params,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: -a.position,
                    weight: a.weight,
                })
                .collect(),
            continuous: Arc::new(move |x: T| inner(-x)),
        }
    }
}

impl<T: Real> fmt::Debug for MixedDensity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixedDensity")
            .field("t", &self.t)
            .field("params", &self.params)
            .field("atoms", &self.atoms)
            .finish_non_exhaustive()
    }
}

/// How an infinite series is cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationPolicy {
    FixedTerms(usize),
    Adaptive(EvalTolerance),
}

impl TruncationPolicy {
    pub fn fixed(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("fixed truncation needs at least one term".into()));
        }
        Ok(Self::FixedTerms(n))
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self::Adaptive(EvalTolerance::default())
    }
}

/// Strictly increasing evaluation points inside `[-vt, vt]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    t: T,
    points: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(t: T, params: &ModelParams<T>, points: Vec<T>) -> Result<Self> {
        check_time(t)?;
        let reach = params.reach(t);
        if let Some(p) = points.iter().find(|p| !(p.abs() <= reach)) {
            return Err(Error::Domain(format!("grid point {p} outside [-{reach}, {reach}]")));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("grid points must be strictly increasing".into()));
        }
        Ok(Self { t, points })
    }

    /// `n` equally spaced points from `x_min` to `x_max` inclusive.
    pub fn uniform(t: T, params: &ModelParams<T>, x_min: T, x_max: T, n: usize) -> Result<Self> {
        let points = match n {
            0 => Vec::new(),
            1 => vec![x_min],
            _ => {
                let step = (x_max - x_min) / T::count(n - 1);
                (0..n)
                    .map(|i| if i == n - 1 { x_max } else { x_min + step * T::count(i) })
                    .collect()
            }
        };
        Self::new(t, params, points)
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1] (positive half).
const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const GK15_GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const QUADRATURE_MAX_INTERVALS: usize = 4000;

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gk15<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> Panel<T> {
    let center = (a + b) * T::half();
    let half = (b - a) * T::half();
    let mut kronrod = T::zero();
    let mut gauss = T::zero();
    for (i, (&node, &wk)) in GK15_NODES.iter().zip(&GK15_KRONROD_WEIGHTS).enumerate() {
        let fx = if node == 0.0 {
            f(center)
        } else {
            let dx = half * T::lit(node);
            f(center - dx) + f(center + dx)
        };
        kronrod = kronrod + T::lit(wk) * fx;
        if i % 2 == 1 {
            gauss = gauss + T::lit(GK15_GAUSS_WEIGHTS[i / 2]) * fx;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive Gauss-Kronrod (7/15) integral of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate is at most `tol`. Deterministic for fixed inputs.
pub fn quadrature<T: Real>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<T> {
    if !(a < b) {
        if a == b {
            return Ok(T::zero());
        }
        return Err(Error::Domain(format!("quadrature needs a < b, got [{a}, {b}]")));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidParams(format!("quadrature tolerance must be positive, got {tol}")));
    }
    let mut panels = vec![gk15(&f, a, b)];
    loop {
        let (mut total_err, mut worst, mut worst_err) = (T::zero(), 0usize, -T::one());
        for (i, p) in panels.iter().enumerate() {
            total_err = total_err + p.error;
            if p.error > worst_err {
                worst_err = p.error;
                worst = i;
            }
        }
        if !total_err.is_finite() {
            return Err(Error::Quadrature {
                tol: tol.to_f64_lossy(),
                intervals: panels.len(),
                estimate: f64::NAN,
            });
        }
        if total_err <= tol {
            break;
        }
        if panels.len() >= QUADRATURE_MAX_INTERVALS {
            return Err(Error::Quadrature {
                tol: tol.to_f64_lossy(),
                intervals: panels.len(),
                estimate: total_err.to_f64_lossy(),
            });
        }
        let p = panels.swap_remove(worst);
        let mid = (p.a + p.b) * T::half();
        panels.push(gk15(&f, p.a, mid));
        panels.push(gk15(&f, mid, p.b));
    }
    // Sum in a fixed order so the result does not depend on split history.
    panels.sort_by(|p, q| p.a.partial_cmp(&q.a).expect("finite panel bounds"));
    Ok(panels.iter().fold(T::zero(), |acc, p| acc + p.value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> ModelParams<f64> {
        ModelParams::unit()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0).is_err());
        assert!(ModelParams::new(1.0, f64::INFINITY).is_err());
        let p = ModelParams::new(2.0, 3.0).unwrap();
        assert_eq!(p.reversal_rate(), 1.0);
        assert_eq!(p.reach(2.0), 6.0);
    }

    #[test]
    fn quadrature_constant() {
        let v = quadrature(|_| 1.0, 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_square() {
        let v = quadrature(|x: f64| x * x, -1.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_uniform_front_density() {
        // One reversal leaves the walker uniform on [-vt, vt].
        let (t, p) = (2.0, unit());
        let reach = p.reach(t);
        let v = quadrature(|_| 1.0 / (2.0 * reach), -reach, reach, 1e-12).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quadrature_peaked_integrand() {
        let v = quadrature(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert_relative_eq!(v, exact, max_relative = 1e-10);
    }

    #[test]
    fn quadrature_budget_exhaustion() {
        // divergent: every panel touching the origin keeps the same error
        let err = quadrature(|x: f64| 1.0 / x, 0.0, 1.0, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn quadrature_is_deterministic() {
        let f = |x: f64| (3.0 * x).sin().exp();
        let a = quadrature(f, 0.0, 4.0, 1e-12).unwrap();
        let b = quadrature(f, 0.0, 4.0, 1e-12).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn mixed_density_rejects_off_front_atoms() {
        let p = unit();
        let bad = vec![Atom { position: 0.5, weight: 0.1 }];
        assert!(MixedDensity::new(1.0, p, bad, |_| 0.0).is_err());
        let heavy = vec![Atom { position: 1.0, weight: 1.5 }];
        assert!(MixedDensity::new(1.0, p, heavy, |_| 0.0).is_err());
    }

    #[test]
    fn mixed_density_cdf_and_reflection() {
        let p = unit();
        let atoms = vec![Atom { position: 1.0, weight: 0.25 }];
        // Continuous part 0.75 * (x + 1) / 2 on [-1, 1].
        let d = MixedDensity::new(1.0, p, atoms, |x: f64| 0.375 * (x + 1.0)).unwrap();
        assert_relative_eq!(d.total_mass(1e-12).unwrap(), 1.0, epsilon = 1e-12);
        let cdf = d.cdf_at(&[-1.0, 0.0, 0.999, 1.0], 1e-13).unwrap();
        assert_relative_eq!(cdf[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(cdf[1], 0.1875, epsilon = 1e-13);
        assert!(cdf[2] < 0.75 + 1e-12);
        assert_relative_eq!(cdf[3], 1.0, epsilon = 1e-13);

        let r = d.reflect();
        assert_eq!(r.atom_at(-1.0), 0.25);
        assert_eq!(r.continuous(0.3), d.continuous(-0.3));
        let rc = r.cdf_at(&[-1.0], 1e-13).unwrap();
        assert_eq!(rc[0], 0.25);
    }

    #[test]
    fn continuous_is_zero_off_support() {
        let d = MixedDensity::new(1.0, unit(), vec![], |_| 7.0).unwrap();
        assert_eq!(d.continuous(1.5), 0.0);
        assert_eq!(d.continuous(1.0), 7.0);
    }

    #[test]
    fn grid_validation() {
        let p = unit();
        assert!(Grid::new(1.0, &p, vec![-0.5, 0.0, 0.5]).is_ok());
        assert!(Grid::new(1.0, &p, vec![0.0, 0.0]).is_err());
        assert!(Grid::new(1.0, &p, vec![0.0, 1.5]).is_err());
        let g = Grid::uniform(5.21, &p, -5.21, 5.21, 101).unwrap();
        assert_eq!(g.len(), 101);
        assert_eq!(g.points()[0], -5.21);
        assert_eq!(g.points()[100], 5.21);
    }

    #[test]
    fn truncation_policy_rejects_zero_terms() {
        assert!(TruncationPolicy::fixed(0).is_err());
        assert_eq!(TruncationPolicy::fixed(3).unwrap(), TruncationPolicy::FixedTerms(3));
    }
}
