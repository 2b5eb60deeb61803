//! Integer-lattice combinatorics behind the occupation-time martingale.
//!
//! A compactly supported potential `V` on the integers induces the derived
//! functions `H` (partial sums), `G` (distance-kernel transform), `v`
//! (compensator increments of the associated walk martingale) and `g`
//! (cross-bracket increments against the driving walk), together with the
//! constants `c` (boundary value of `G`), `mu_v` (total mass of `v`) and
//! `c_v_sq`. All of them are exact finite sums; everything here is pure
//! double-precision arithmetic on finite windows with closed-form tails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for deciding that the total mass of a potential is zero.
const MASS_EPS: f64 = 1e-12;

/// A real-valued function on the integers with compact support.
///
/// Stored as the support window `[lo, hi]`; boundary values are nonzero by
/// construction (zeros are trimmed at construction).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticePotential {
    lo: i64,
    values: Vec<f64>,
}

impl LatticePotential {
    /// Build a potential from its leftmost index and window values.
    ///
    /// Zero boundary values are trimmed so that `value(lo)` and `value(hi)`
    /// are nonzero; the all-zero function is rejected.
    pub fn new(lo: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidPotential("empty value list".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPotential("non-finite value".into()));
        }
        let first = match values.iter().position(|&x| x != 0.0) {
            Some(i) => i,
            None => return Err(Error::InvalidPotential("identically zero".into())),
        };
        let last = values.iter().rposition(|&x| x != 0.0).unwrap();
        Ok(Self {
            lo: lo + first as i64,
            values: values[first..=last].to_vec(),
        })
    }

    /// Parse the plain-text format: a line `a b` with the support bounds,
    /// followed by `b - a + 1` whitespace-separated reals.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let a: i64 = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing support bound a".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("support bound a: {e}")))?;
        let b: i64 = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing support bound b".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("support bound b: {e}")))?;
        if b < a {
            return Err(Error::Parse(format!("support bounds out of order: {a} {b}")));
        }
        let expected = (b - a + 1) as usize;
        let values: Vec<f64> = tokens
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("value `{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if values.len() != expected {
            return Err(Error::Parse(format!(
                "expected {expected} values for support [{a}, {b}], found {}",
                values.len()
            )));
        }
        Self::new(a, values)
    }

    /// Render in the same text format `from_text` reads.
    pub fn to_text(&self) -> String {
        let vals: Vec<String> = self.values.iter().map(|v| format!("{v}")).collect();
        format!("{} {}\n{}\n", self.lo, self.hi(), vals.join(" "))
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    /// `V(x)`, zero outside the support window.
    pub fn value(&self, x: i64) -> f64 {
        if x < self.lo {
            return 0.0;
        }
        let i = (x - self.lo) as usize;
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Support indices `lo..=hi`.
    pub fn support(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi()
    }

    /// Total mass `sum_x V(x)`.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Whether the total mass vanishes (up to rounding in the input values).
    pub fn has_zero_mass(&self) -> bool {
        let scale: f64 = self.values.iter().map(|v| v.abs()).sum();
        self.total_mass().abs() <= MASS_EPS * scale.max(1.0)
    }

    /// `sum_x V(x)^2`.
    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

impl<'de> Deserialize<'de> for LatticePotential {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            lo: i64,
            values: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        LatticePotential::new(raw.lo, raw.values).map_err(serde::de::Error::custom)
    }
}

/// Affine extension `x -> intercept + slope * x` used outside a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub intercept: f64,
    pub slope: f64,
}

impl Affine {
    pub const ZERO: Affine = Affine { intercept: 0.0, slope: 0.0 };

    pub fn constant(c: f64) -> Self {
        Affine { intercept: c, slope: 0.0 }
    }

    pub fn at(&self, x: i64) -> f64 {
        self.intercept + self.slope * x as f64
    }
}

/// An integer-indexed real function stored on a finite window with exact
/// affine tails on both sides.
///
/// The tails are closed forms of the function outside the window, not an
/// approximation, so `eval` is total and exact; operations like [`apply_t`]
/// may therefore consult neighbours beyond the window freely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowFn {
    lo: i64,
    values: Vec<f64>,
    left: Affine,
    right: Affine,
}

impl WindowFn {
    pub fn new(lo: i64, values: Vec<f64>, left: Affine, right: Affine) -> Self {
        assert!(!values.is_empty(), "window must be nonempty");
        Self { lo, values, left, right }
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.lo + self.values.len() as i64 - 1)
    }

    #[inline]
    pub fn eval(&self, x: i64) -> f64 {
        if x < self.lo {
            return self.left.at(x);
        }
        let i = (x - self.lo) as usize;
        match self.values.get(i) {
            Some(&v) => v,
            None => self.right.at(x),
        }
    }

    /// Largest `|f(x)|` over the stored window and the two adjacent tail points.
    pub fn max_abs(&self) -> f64 {
        let (lo, hi) = self.window();
        self.values
            .iter()
            .map(|v| v.abs())
            .chain([self.eval(lo - 1).abs(), self.eval(hi + 1).abs()])
            .fold(0.0, f64::max)
    }

    /// Sum of the window values.
    pub fn window_sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Window contents as `(x, f(x))` pairs.
    pub fn to_pairs(&self) -> Vec<(i64, f64)> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| (self.lo + i as i64, v))
            .collect()
    }
}

/// Partial-sum function `H(x) = sum_{y < x} V(y)` on the window `[lo, hi+1]`.
///
/// `H` vanishes left of the support and equals the total mass right of it.
pub fn cumulative_h(pot: &LatticePotential) -> WindowFn {
    let lo = pot.lo();
    let hi = pot.hi();
    let mut values = Vec::with_capacity((hi - lo + 2) as usize);
    let mut acc = 0.0;
    for x in lo..=hi + 1 {
        values.push(acc);
        acc += pot.value(x);
    }
    WindowFn::new(lo, values, Affine::ZERO, Affine::constant(pot.total_mass()))
}

/// Distance-kernel transform `G(x) = -sum_y |x - y| V(y)` on `[lo-1, hi+1]`,
/// together with the boundary constant `c = sum_y y V(y)`.
///
/// Outside the support, `G(x) = c - mass * x` to the right and
/// `-c + mass * x` to the left; for a zero-mass potential these reduce to the
/// constants `c` and `-c`.
pub fn potential_g(pot: &LatticePotential) -> (WindowFn, f64) {
    let lo = pot.lo();
    let hi = pot.hi();
    let c: f64 = pot.support().map(|y| y as f64 * pot.value(y)).sum();
    let mass = pot.total_mass();
    let values: Vec<f64> = (lo - 1..=hi + 1)
        .map(|x| -pot.support().map(|y| (x - y).abs() as f64 * pot.value(y)).sum::<f64>())
        .collect();
    let g = WindowFn::new(
        lo - 1,
        values,
        Affine { intercept: -c, slope: mass },
        Affine { intercept: c, slope: -mass },
    );
    (g, c)
}

/// Nearest-neighbour averaging `(Tf)(x) = (f(x+1) + f(x-1)) / 2`.
///
/// The result keeps the input's window and tails: averaging preserves affine
/// functions, so the tails stay exact one step beyond the window and outward.
pub fn apply_t(f: &WindowFn) -> WindowFn {
    let (lo, hi) = f.window();
    let values = (lo..=hi).map(|x| 0.5 * (f.eval(x + 1) + f.eval(x - 1))).collect();
    WindowFn::new(lo, values, f.left, f.right)
}

/// Compensator increments `v = T(G^2) - (TG)^2` on the window `[lo-1, hi+1]`.
///
/// Outside that window `v` is identically `mass^2`, which vanishes exactly
/// for zero-mass potentials (compact support).
pub fn compensator_v(pot: &LatticePotential) -> WindowFn {
    let (g, _) = potential_g(pot);
    let lo = pot.lo();
    let hi = pot.hi();
    let values: Vec<f64> = (lo - 1..=hi + 1)
        .map(|x| {
            let a = g.eval(x + 1);
            let b = g.eval(x - 1);
            0.5 * (a * a + b * b) - (0.5 * (a + b)).powi(2)
        })
        .collect();
    let tail = pot.total_mass().powi(2);
    WindowFn::new(lo - 1, values, Affine::constant(tail), Affine::constant(tail))
}

/// The three equivalent expressions for `mu_v = sum_x v(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuVFormulas {
    /// Direct window sum of the compensator increments.
    pub direct: f64,
    /// `sum_x (V(x) + 2 H(x))^2`.
    pub squares: f64,
    /// `2 c_v_sq - sum_x V(x)^2`.
    pub two_c_minus_sq: f64,
}

/// Compute `mu_v` by all three routes. Requires a zero-mass potential; the
/// identities fail otherwise (and `v` is not even summable).
pub fn mu_v_formulas(pot: &LatticePotential) -> Result<MuVFormulas> {
    require_zero_mass(pot)?;
    let direct = compensator_v(pot).window_sum();
    let h = cumulative_h(pot);
    let (lo, hi) = (pot.lo(), pot.hi());
    let squares = (lo..=hi)
        .map(|x| {
            let s = pot.value(x) + 2.0 * h.eval(x);
            s * s
        })
        .sum();
    let two_c_minus_sq = 2.0 * c_v_squared(pot)? - pot.sum_squares();
    Ok(MuVFormulas { direct, squares, two_c_minus_sq })
}

/// `c_v_sq = 2 sum_x H(x)^2` for a zero-mass potential.
pub fn c_v_squared(pot: &LatticePotential) -> Result<f64> {
    require_zero_mass(pot)?;
    let h = cumulative_h(pot);
    Ok(2.0 * h.to_pairs().iter().map(|(_, v)| v * v).sum::<f64>())
}

/// The pairwise route `c_v_sq = -sum_{y,z} |y - z| V(y) V(z)`.
///
/// Kept as an independent second route to [`c_v_squared`]; tests assert the
/// two agree.
pub fn c_v_squared_pairwise(pot: &LatticePotential) -> Result<f64> {
    require_zero_mass(pot)?;
    let mut acc = 0.0;
    for y in pot.support() {
        for z in pot.support() {
            acc -= (y - z).abs() as f64 * pot.value(y) * pot.value(z);
        }
    }
    Ok(acc)
}

/// Cross-bracket increments `g = T(fG) - Tf * TG` with `f(x) = x`, on the
/// window `[lo-2, hi+2]`; zero outside (zero-mass potentials only).
pub fn cross_bracket_g(pot: &LatticePotential) -> Result<WindowFn> {
    require_zero_mass(pot)?;
    let (g, _) = potential_g(pot);
    let lo = pot.lo();
    let hi = pot.hi();
    let values: Vec<f64> = (lo - 2..=hi + 2)
        .map(|x| {
            let xf = x as f64;
            let t_fg = 0.5 * ((xf + 1.0) * g.eval(x + 1) + (xf - 1.0) * g.eval(x - 1));
            let tg = 0.5 * (g.eval(x + 1) + g.eval(x - 1));
            t_fg - xf * tg
        })
        .collect();
    Ok(WindowFn::new(lo - 2, values, Affine::ZERO, Affine::ZERO))
}

fn require_zero_mass(pot: &LatticePotential) -> Result<()> {
    if pot.has_zero_mass() {
        Ok(())
    } else {
        Err(Error::NonzeroMass(pot.total_mass()))
    }
}

/// The potential together with everything derived from it.
///
/// `mu_v`, `c_v_sq` and the cross-bracket function exist only in the
/// zero-mass regime; for nonzero mass the corresponding fields are `None`
/// (the walk statistics then live on a different scale and are handled by
/// the simulation layer directly).
#[derive(Debug, Clone, Serialize)]
pub struct DobrushinSystem {
    potential: LatticePotential,
    h: WindowFn,
    g: WindowFn,
    c: f64,
    v: WindowFn,
    cross: Option<WindowFn>,
    mass: f64,
    mu_v: Option<f64>,
    c_v_sq: Option<f64>,
}

impl DobrushinSystem {
    pub fn new(potential: LatticePotential) -> Self {
        let h = cumulative_h(&potential);
        let (g, c) = potential_g(&potential);
        let v = compensator_v(&potential);
        let zero_mass = potential.has_zero_mass();
        let cross = zero_mass.then(|| cross_bracket_g(&potential).expect("zero mass checked"));
        let mu_v = zero_mass.then(|| v.window_sum());
        let c_v_sq = zero_mass.then(|| c_v_squared(&potential).expect("zero mass checked"));
        let mass = potential.total_mass();
        Self { potential, h, g, c, v, cross, mass, mu_v, c_v_sq }
    }

    pub fn potential(&self) -> &LatticePotential {
        &self.potential
    }

    /// Partial-sum function `H`.
    pub fn h(&self) -> &WindowFn {
        &self.h
    }

    /// Distance-kernel transform `G`.
    pub fn g(&self) -> &WindowFn {
        &self.g
    }

    /// Boundary constant `c = sum_y y V(y)`.
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Compensator increment function `v`.
    pub fn v(&self) -> &WindowFn {
        &self.v
    }

    /// Cross-bracket increment function `g`; `None` unless the mass is zero.
    pub fn cross(&self) -> Option<&WindowFn> {
        self.cross.as_ref()
    }

    /// Total mass of the potential.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn has_zero_mass(&self) -> bool {
        self.potential.has_zero_mass()
    }

    /// Total mass of `v`; `None` unless the potential mass is zero.
    pub fn mu_v(&self) -> Option<f64> {
        self.mu_v
    }

    pub fn c_v_sq(&self) -> Option<f64> {
        self.c_v_sq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn pot(lo: i64, vals: &[f64]) -> LatticePotential {
        LatticePotential::new(lo, vals.to_vec()).unwrap()
    }

    /// Brute-force evaluation of the defining sums over a wide raw window,
    /// independent of the WindowFn plumbing.
    mod brute {
        use super::super::LatticePotential;

        pub fn h(p: &LatticePotential, x: i64) -> f64 {
            (p.lo()..x.min(p.hi() + 1)).map(|y| p.value(y)).sum()
        }

        pub fn g(p: &LatticePotential, x: i64) -> f64 {
            -p.support().map(|y| (x - y).abs() as f64 * p.value(y)).sum::<f64>()
        }

        pub fn t(f: impl Fn(i64) -> f64, x: i64) -> f64 {
            0.5 * (f(x + 1) + f(x - 1))
        }

        /// Second route for v: `2VG - V^2 + T(G^2) - G^2`.
        pub fn v_alt(p: &LatticePotential, x: i64) -> f64 {
            let gg = |y| g(p, y);
            2.0 * p.value(x) * gg(x) - p.value(x).powi(2) + t(|y| gg(y).powi(2), x)
                - gg(x).powi(2)
        }

        pub fn cross(p: &LatticePotential, x: i64) -> f64 {
            let gg = |y| g(p, y);
            t(|y| y as f64 * gg(y), x) - x as f64 * t(gg, x)
        }
    }

    #[test]
    fn cumulative_h_examples() {
        let h = cumulative_h(&pot(0, &[-1.0, 1.0]));
        assert_eq!(h.eval(0), 0.0);
        assert_eq!(h.eval(1), -1.0);
        assert_eq!(h.eval(2), 0.0);

        let h = cumulative_h(&pot(0, &[1.0]));
        assert_eq!(h.eval(1), 1.0);

        let h = cumulative_h(&pot(0, &[-1.0, 0.0, 1.0]));
        for (x, want) in [(0, 0.0), (1, -1.0), (2, -1.0), (3, 0.0)] {
            assert_eq!(h.eval(x), want);
        }
        // Tails: zero on the left, total mass on the right.
        assert_eq!(h.eval(-7), 0.0);
        assert_eq!(h.eval(9), 0.0);
        let h = cumulative_h(&pot(0, &[2.0, 1.0]));
        assert_eq!(h.eval(10), 3.0);

        let p = pot(-3, &[1.0, 0.0, -2.0, 4.0, -1.0]);
        let h = cumulative_h(&p);
        for x in -8..=8 {
            assert_eq!(h.eval(x), brute::h(&p, x));
        }
    }

    #[test]
    fn potential_g_examples() {
        let (g, c) = potential_g(&pot(0, &[-1.0, 1.0]));
        assert_eq!(g.eval(0), -1.0);
        assert_eq!(g.eval(1), 1.0);
        assert_eq!(c, 1.0);
        assert_eq!(g.eval(5), 1.0);
        assert_eq!(g.eval(-5), -1.0);

        let (g, c) = potential_g(&pot(-1, &[1.0, -2.0, 1.0]));
        assert_eq!(c, 0.0);
        for x in 0..=4 {
            assert_eq!(g.eval(x), g.eval(-x), "even symmetry at {x}");
        }
    }

    #[test]
    fn potential_g_matches_brute_force_with_nonzero_mass() {
        let p = pot(-2, &[1.0, 3.0, -1.0, 2.0]);
        let (g, _) = potential_g(&p);
        for x in -12..=12 {
            assert!((g.eval(x) - brute::g(&p, x)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn apply_t_fixes_identity_and_constants() {
        let ident = WindowFn::new(
            -3,
            (-3..=3).map(|x| x as f64).collect(),
            Affine { intercept: 0.0, slope: 1.0 },
            Affine { intercept: 0.0, slope: 1.0 },
        );
        let t = apply_t(&ident);
        for x in -6..=6 {
            assert_eq!(t.eval(x), x as f64);
        }

        let konst = WindowFn::new(0, vec![4.5; 3], Affine::constant(4.5), Affine::constant(4.5));
        let t = apply_t(&konst);
        for x in -2..=5 {
            assert_eq!(t.eval(x), 4.5);
        }
    }

    #[test]
    fn averaging_g_subtracts_the_potential() {
        // TG = G - V, checked pointwise against direct averaging.
        let p = pot(0, &[-1.0, 1.0]);
        let (g, _) = potential_g(&p);
        let tg = apply_t(&g);
        assert_eq!(tg.eval(0), 0.0);
        assert_eq!(tg.eval(1), 0.0);
        for x in -6..=8 {
            assert!((tg.eval(x) - (g.eval(x) - p.value(x))).abs() < 1e-12);
            assert!((tg.eval(x) - brute::t(|y| brute::g(&p, y), x)).abs() < 1e-12);
        }
    }

    #[test]
    fn compensator_examples() {
        let v = compensator_v(&pot(0, &[-1.0, 1.0]));
        assert_eq!(v.window_sum(), 2.0);
        let v = compensator_v(&pot(0, &[-1.0, 0.0, 1.0]));
        assert_eq!(v.window_sum(), 6.0);
        for (_, val) in v.to_pairs() {
            assert!(val >= 0.0);
        }
    }

    #[test]
    fn compensator_agrees_with_second_formula() {
        for p in [
            pot(0, &[-1.0, 1.0]),
            pot(-1, &[1.0, -2.0, 1.0]),
            pot(-3, &[2.0, -1.0, 0.0, -3.0, 2.0]),
        ] {
            let v = compensator_v(&p);
            for x in p.lo() - 4..=p.hi() + 4 {
                assert!((v.eval(x) - brute::v_alt(&p, x)).abs() < 1e-12, "x = {x}");
            }
        }
    }

    #[test]
    fn mu_v_ladder_for_two_point_potentials() {
        for a in 1..=5i64 {
            let mut vals = vec![0.0; a as usize + 1];
            vals[0] = -1.0;
            vals[a as usize] = 1.0;
            let p = pot(0, &vals);
            let f = mu_v_formulas(&p).unwrap();
            let want = (4 * a - 2) as f64;
            assert_eq!(f.direct, want);
            assert_eq!(f.squares, want);
            assert_eq!(f.two_c_minus_sq, want);
        }
    }

    #[test]
    fn identity_ops_reject_nonzero_mass() {
        let p = pot(0, &[1.0]);
        assert!(matches!(mu_v_formulas(&p), Err(Error::NonzeroMass(_))));
        assert!(matches!(c_v_squared(&p), Err(Error::NonzeroMass(_))));
        assert!(matches!(cross_bracket_g(&p), Err(Error::NonzeroMass(_))));
    }

    #[test]
    fn c_v_squared_examples() {
        let p = pot(0, &[-1.0, 1.0]);
        assert_eq!(c_v_squared(&p).unwrap(), 2.0);
        assert_eq!(c_v_squared_pairwise(&p).unwrap(), 2.0);
        let q = pot(0, &[-1.0, 0.0, 1.0]);
        assert_eq!(c_v_squared(&q).unwrap(), 4.0);
        // 2 c_v_sq = mu_v + sum V^2.
        let f = mu_v_formulas(&p).unwrap();
        assert_eq!(2.0 * c_v_squared(&p).unwrap(), f.direct + p.sum_squares());
    }

    #[test]
    fn cross_bracket_matches_brute_force_and_vanishes_outside() {
        let p = pot(0, &[-1.0, 1.0]);
        let g = cross_bracket_g(&p).unwrap();
        for x in -8..=10 {
            assert!((g.eval(x) - brute::cross(&p, x)).abs() < 1e-12, "x = {x}");
        }
        assert_eq!(g.eval(50), 0.0);
        assert_eq!(g.eval(-50), 0.0);

        // Odd f against even G makes the bracket function odd.
        let sym = pot(-1, &[1.0, -2.0, 1.0]);
        let g = cross_bracket_g(&sym).unwrap();
        for x in 0..=5 {
            assert!((g.eval(-x) + g.eval(x)).abs() < 1e-12, "antisymmetry at {x}");
        }
    }

    /// Draw a zero-mass integer potential supported in [-10, 10] with values
    /// in [-5, 5] by rejection.
    pub(crate) fn random_zero_mass(rng: &mut impl Rng) -> LatticePotential {
        loop {
            let lo = rng.gen_range(-10..=9);
            let hi = rng.gen_range(lo..=10.min(lo + 20));
            let vals: Vec<f64> =
                (lo..=hi).map(|_| rng.gen_range(-5i32..=5) as f64).collect();
            let sum: f64 = vals.iter().sum();
            if sum != 0.0 || vals.iter().all(|&v| v == 0.0) {
                continue;
            }
            return LatticePotential::new(lo, vals).unwrap();
        }
    }

    #[test]
    fn random_zero_mass_potentials_satisfy_all_identities() {
        let mut rng = crate::rng::stream_rng(0xD0B5, 0);
        for _ in 0..200 {
            let p = random_zero_mass(&mut rng);
            let f = mu_v_formulas(&p).unwrap();
            assert!((f.direct - f.squares).abs() < 1e-9, "{p:?}");
            assert!((f.direct - f.two_c_minus_sq).abs() < 1e-9, "{p:?}");
            let c1 = c_v_squared(&p).unwrap();
            let c2 = c_v_squared_pairwise(&p).unwrap();
            assert!((c1 - c2).abs() < 1e-9, "{p:?}");
            assert!((2.0 * c1 - (f.direct + p.sum_squares())).abs() < 1e-9, "{p:?}");
            assert!(c1 > 0.0);
            assert!(f.direct >= 0.0);

            let v = compensator_v(&p);
            for (x, val) in v.to_pairs() {
                assert!(val >= 0.0, "v({x}) = {val} for {p:?}");
            }
            let (g, _) = potential_g(&p);
            let tg = apply_t(&g);
            for x in p.lo() - 2..=p.hi() + 2 {
                assert!(
                    (tg.eval(x) - (g.eval(x) - p.value(x))).abs() < 1e-9,
                    "TG != G - V at {x} for {p:?}"
                );
            }
        }
    }

    #[test]
    fn trimming_and_rejects() {
        let p = pot(-2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(p.lo(), -1);
        assert_eq!(p.hi(), 0);
        assert!(LatticePotential::new(0, vec![0.0, 0.0]).is_err());
        assert!(LatticePotential::new(0, vec![]).is_err());
        assert!(LatticePotential::new(0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = LatticePotential::from_text("0 1\n-1 1\n").unwrap();
        assert_eq!(p, pot(0, &[-1.0, 1.0]));
        let again = LatticePotential::from_text(&p.to_text()).unwrap();
        assert_eq!(again, p);
        assert!(LatticePotential::from_text("0 2\n-1 1\n").is_err());
        assert!(LatticePotential::from_text("1 0\n").is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Zero-mass potentials built from cancelling pairs.
        fn zero_mass_strategy() -> impl Strategy<Value = LatticePotential> {
            proptest::collection::vec(((-10i64..=10), (-10i64..=10), (1i32..=5)), 1..6)
                .prop_filter_map("degenerate", |pairs| {
                    let mut map = std::collections::BTreeMap::new();
                    for (at, minus_at, w) in pairs {
                        *map.entry(at).or_insert(0.0) += w as f64;
                        *map.entry(minus_at).or_insert(0.0) -= w as f64;
                    }
                    let lo = *map.keys().next().unwrap();
                    let hi = *map.keys().last().unwrap();
                    let vals: Vec<f64> =
                        (lo..=hi).map(|x| map.get(&x).copied().unwrap_or(0.0)).collect();
                    LatticePotential::new(lo, vals).ok()
                })
        }

        proptest! {
            #[test]
            fn mu_v_scales_quadratically(p in zero_mass_strategy(), lambda in -4.0f64..4.0) {
                prop_assume!(lambda != 0.0);
                let scaled = LatticePotential::new(
                    p.lo(),
                    p.support().map(|x| lambda * p.value(x)).collect(),
                ).unwrap();
                let base = mu_v_formulas(&p).unwrap().direct;
                let scaled_mu = mu_v_formulas(&scaled).unwrap().direct;
                prop_assert!((scaled_mu - lambda * lambda * base).abs() < 1e-9 * (1.0 + base));
            }

            #[test]
            fn constants_are_translation_invariant(p in zero_mass_strategy(), k in -20i64..=20) {
                let shifted = LatticePotential::new(
                    p.lo() + k,
                    p.support().map(|x| p.value(x)).collect(),
                ).unwrap();
                let a = mu_v_formulas(&p).unwrap();
                let b = mu_v_formulas(&shifted).unwrap();
                prop_assert!((a.direct - b.direct).abs() < 1e-9);
                prop_assert!(
                    (c_v_squared(&p).unwrap() - c_v_squared(&shifted).unwrap()).abs() < 1e-9
                );
                prop_assert!((p.sum_squares() - shifted.sum_squares()).abs() < 1e-9);
            }

            #[test]
            fn three_mu_v_routes_agree(p in zero_mass_strategy()) {
                let f = mu_v_formulas(&p).unwrap();
                prop_assert!((f.direct - f.squares).abs() < 1e-9);
                prop_assert!((f.direct - f.two_c_minus_sq).abs() < 1e-9);
            }
        }
    }
}
