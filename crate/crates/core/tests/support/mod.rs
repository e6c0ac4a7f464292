#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use randflight::closed_form::{bullet_continuous, goldstein_pdf};
use randflight::collision::{isotropic_continuous, rho_bullet_c, rho_r};
use randflight::fourier::{char_fn, harmonic, moment};
use randflight::montecarlo::run_ensemble;
use randflight::specfun::{bessel_i0, cos_sqrt, hyp1f1_moment, sinc_sqrt};
use randflight::{Direction, InitialCondition, Method, MethodSettings, Model, Params, TruncationPolicy};

/// A named property run through a proptest runner.
pub struct Property {
    pub name: &'static str,
    pub run: fn(&mut TestRunner) -> Result<(), String>,
}

pub const ALL: &[Property] = &[
    Property { name: "rho_r pairing", run: pairing },
    Property { name: "rho_r symmetry", run: rho_r_symmetry },
    Property { name: "bullet kernel reflection sum is even", run: bullet_kernel_even_part },
    Property { name: "goldstein even and positive", run: goldstein_even_positive },
    Property { name: "isotropic densities symmetric", run: isotropic_densities_symmetric },
    Property { name: "bullet left is right reflected", run: bullet_reflection },
    Property { name: "continuous parts nonnegative", run: nonnegative },
    Property { name: "char_fn(0) = 1", run: char_fn_at_zero },
    Property { name: "char_fn branch continuity", run: branch_continuity },
    Property { name: "harmonic equals char_fn", run: harmonic_is_char_fn },
    Property { name: "moment(0) = 1", run: zeroth_moment },
    Property { name: "telegraph equation residual", run: telegraph_residual },
    Property { name: "specfun lower bounds", run: specfun_bounds },
    Property { name: "cos_sqrt and sinc_sqrt closed forms", run: sqrt_pair },
    Property { name: "ensemble reproducibility", run: reproducible_ensemble },
];

pub fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    )
}

fn params() -> impl Strategy<Value = Params> {
    (0.2f64..5.0, 0.2f64..5.0).prop_map(|(l, v)| Params::new(l, v).unwrap())
}

/// `(params, t, u)` with `u` a fraction of the reach in `(-1, 1)`.
fn interior() -> impl Strategy<Value = (Params, f64, f64)> {
    (params(), 0.05f64..20.0, -0.999f64..0.999)
}

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

fn ok<T>(r: randflight::Result<T>) -> Result<T, TestCaseError> {
    r.map_err(|e| TestCaseError::fail(e.to_string()))
}

pub fn pairing(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(1usize..=10, interior()), |(r, (p, t, u))| {
        let x = u * p.reach(t);
        prop_assert_eq!(ok(rho_r(2 * r - 1, x, t, &p))?, ok(rho_r(2 * r, x, t, &p))?);
        Ok(())
    }))
}

pub fn rho_r_symmetry(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(1usize..=20, interior()), |(r, (p, t, u))| {
        let x = u * p.reach(t);
        prop_assert_eq!(ok(rho_r(r, x, t, &p))?, ok(rho_r(r, -x, t, &p))?);
        Ok(())
    }))
}

pub fn bullet_kernel_even_part(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(1usize..=12, interior()), |(c, (p, t, u))| {
        let x = u * p.reach(t);
        let even = |x: f64| Ok::<_, TestCaseError>(ok(rho_bullet_c(c, x, t, &p))? + ok(rho_bullet_c(c, -x, t, &p))?);
        let (a, b) = (even(x)?, even(-x)?);
        prop_assert!((a - b).abs() <= 1e-15 * a.abs());
        Ok(())
    }))
}

pub fn goldstein_even_positive(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&interior(), |(p, t, u)| {
        let x = u * p.reach(t);
        let (a, b) = (ok(goldstein_pdf(x, t, &p))?, ok(goldstein_pdf(-x, t, &p))?);
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a);
        Ok(())
    }))
}

pub fn isotropic_densities_symmetric(runner: &mut TestRunner) -> Result<(), String> {
    let methods = proptest::sample::select(Method::ALL.to_vec());
    report(runner.run(&(methods, (params(), 0.05f64..16.0, -0.999f64..0.999)), |(m, (p, t, u))| {
        let settings = MethodSettings {
            harmonics: Some(12),
            ..MethodSettings::default()
        };
        let d = ok(m.density(InitialCondition::Isotropic, t, &p, &settings))?;
        let x = u * p.reach(t);
        let (a, b) = (d.continuous(x), d.continuous(-x));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300), "{m}: {a} vs {b}");
        if let [left, right] = d.atoms() {
            prop_assert_eq!(left.weight, right.weight);
        }
        Ok(())
    }))
}

pub fn bullet_reflection(runner: &mut TestRunner) -> Result<(), String> {
    let methods = proptest::sample::select(Method::ALL.to_vec());
    report(runner.run(&(methods, interior()), |(m, (p, t, u))| {
        let x = u * p.reach(t);
        prop_assert_eq!(
            ok(bullet_continuous(x, t, &p, Direction::Right))?,
            ok(bullet_continuous(-x, t, &p, Direction::Left))?
        );
        let settings = MethodSettings {
            harmonics: Some(12),
            ..MethodSettings::default()
        };
        let right = ok(m.density(InitialCondition::BulletRight, t, &p, &settings))?;
        let left = ok(m.density(InitialCondition::BulletLeft, t, &p, &settings))?;
        let (a, b) = (right.continuous(x), left.continuous(-x));
        prop_assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300), "{m}: {a} vs {b}");
        Ok(())
    }))
}

pub fn nonnegative(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(1usize..=12, interior()), |(r, (p, t, u))| {
        let x = u * p.reach(t);
        prop_assert!(ok(rho_r(r, x, t, &p))? >= 0.0);
        prop_assert!(ok(rho_bullet_c(r, x, t, &p))? >= 0.0);
        prop_assert!(ok(goldstein_pdf(x, t, &p))? >= 0.0);
        prop_assert!(ok(isotropic_continuous(x, t, &p, &TruncationPolicy::default()))? >= 0.0);
        for dir in [Direction::Right, Direction::Left] {
            prop_assert!(ok(bullet_continuous(x, t, &p, dir))? >= 0.0);
        }
        Ok(())
    }))
}

pub fn char_fn_at_zero(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(params(), 1e-3f64..40.0), |(p, t)| {
        prop_assert!((ok(char_fn(0.0, t, &p))? - 1.0).abs() < 1e-14);
        Ok(())
    }))
}

/// The jump across `2 pi nu v = lambda/2` after removing the linear change
/// over `2 delta`; the slope there is `-2 pi v t e^{-L} (L + L²/3)`.
pub fn branch_jump(t: f64, p: &Params, delta: f64) -> randflight::Result<(f64, f64)> {
    let nu0 = p.lambda() / (4.0 * std::f64::consts::PI * p.speed());
    let l = p.reversal_rate() * t;
    let slope = -2.0 * std::f64::consts::PI * p.speed() * t * (-l).exp() * (l + l * l / 3.0);
    let raw = char_fn(nu0 + delta, t, p)? - char_fn(nu0 - delta, t, p)?;
    Ok((raw, raw - 2.0 * delta * slope))
}

pub fn branch_continuity(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(params(), 0.05f64..20.0), |(p, t)| {
        let (_, jump) = ok(branch_jump(t, &p, 1e-8))?;
        prop_assert!(jump.abs() < 1e-10, "jump {jump}");
        Ok(())
    }))
}

pub fn harmonic_is_char_fn(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(0u32..200, params(), 0.05f64..20.0), |(h, p, t)| {
        let nu = f64::from(h) / (2.0 * p.reach(t));
        let (a, b) = (harmonic(h, t, &p), ok(char_fn(nu, t, &p))?);
        prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0), "{a} vs {b}");
        Ok(())
    }))
}

pub fn zeroth_moment(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(params(), 1e-3f64..40.0, 1usize..30), |(p, t, m)| {
        prop_assert!((ok(moment(0, t, &p))? - 1.0).abs() < 1e-15);
        let mm = ok(moment(m, t, &p))?;
        prop_assert!(mm > 0.0 && mm <= p.reach(t).powi(2 * m as i32) * (1.0 + 1e-12));
        Ok(())
    }))
}

pub fn telegraph_residual(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(params(), 0.3f64..15.0, -0.9f64..0.9), |(p, t, u)| {
        let h = 1e-4 * p.reach(t);
        let x = u * p.reach(t);
        let f = |x: f64, s: f64| goldstein_pdf(x, s, &p).unwrap();
        let dt = h / p.speed();
        let rho_tt = (f(x, t + dt) - 2.0 * f(x, t) + f(x, t - dt)) / (dt * dt);
        let rho_t = (f(x, t + dt) - f(x, t - dt)) / (2.0 * dt);
        let rho_xx = (f(x + h, t) - 2.0 * f(x, t) + f(x - h, t)) / (h * h);
        let residual = rho_tt + p.lambda() * rho_t - p.speed().powi(2) * rho_xx;
        let scale = rho_tt.abs().max((p.lambda() * rho_t).abs()).max((p.speed().powi(2) * rho_xx).abs());
        prop_assert!(residual.abs() < 1e-4 * scale, "residual {residual} scale {scale}");
        Ok(())
    }))
}

pub fn specfun_bounds(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(0.0f64..50.0, 0.0f64..1.0, 0usize..200, 0.0f64..40.0), |(z, dz, m, w)| {
        let i0 = ok(bessel_i0(z))?;
        prop_assert!(i0 >= 1.0);
        prop_assert!(ok(bessel_i0(z + dz + 1e-3))? > i0);
        prop_assert!(ok(hyp1f1_moment(m, w))? >= 1.0);
        Ok(())
    }))
}

pub fn sqrt_pair(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(-100.0f64..100.0), |y| {
        if y.abs() < 1e-4 {
            prop_assert!((cos_sqrt(y) - (1.0 - y / 2.0 + y * y / 24.0)).abs() < 1e-10);
            prop_assert!((sinc_sqrt(y) - (1.0 - y / 6.0 + y * y / 120.0)).abs() < 1e-10);
            return Ok(());
        }
        let (c, s) = if y > 0.0 {
            let u = y.sqrt();
            (u.cos(), u.sin() / u)
        } else {
            let u = (-y).sqrt();
            (u.cosh(), u.sinh() / u)
        };
        prop_assert!((cos_sqrt(y) - c).abs() <= 1e-13 * c.abs().max(1.0));
        prop_assert!((sinc_sqrt(y) - s).abs() <= 1e-13 * s.abs().max(1.0));
        Ok(())
    }))
}

pub fn reproducible_ensemble(runner: &mut TestRunner) -> Result<(), String> {
    let models = proptest::sample::select(vec![Model::Reversal, Model::Scattering]);
    let ics = proptest::sample::select(vec![
        InitialCondition::Isotropic,
        InitialCondition::BulletRight,
        InitialCondition::BulletLeft,
    ]);
    report(runner.run(&(any::<u64>(), models, ics, params(), 0.1f64..10.0), |(seed, model, ic, p, t)| {
        let a = ok(run_ensemble(5000, t, &p, ic, model, 32, seed))?;
        let b = ok(run_ensemble(5000, t, &p, ic, model, 32, seed))?;
        prop_assert_eq!(a.counts, b.counts);
        prop_assert_eq!(a.atom_counts, b.atom_counts);
        prop_assert_eq!(a.sum_x.to_bits(), b.sum_x.to_bits());
        Ok(())
    }))
}
