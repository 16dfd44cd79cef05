//! Integer feasibility of conjunctions of linear constraints (Omega test).
//!
//! Equalities are eliminated first, using Pugh's symmetric-modulo reduction
//! when no variable has a unit coefficient. Inequalities are then eliminated
//! one variable at a time: exactly when a unit coefficient makes the real
//! shadow integer-exact, otherwise through the dark shadow and, failing that,
//! the grey-shadow splinters. Every step records how to rebuild the eliminated
//! variable so a satisfying assignment can be returned.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::Int;

/// `coeffs . x + constant`, compared against zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Row {
    pub coeffs: Vec<Int>,
    pub constant: Int,
}

impl Row {
    fn gcd(&self) -> Int {
        self.coeffs.iter().fold(Int::zero(), |g, c| g.gcd(c))
    }

    fn eval(&self, x: &[Int]) -> Int {
        let mut acc = self.constant.clone();
        for (c, v) in self.coeffs.iter().zip(x) {
            if !c.is_zero() {
                acc += c * v;
            }
        }
        acc
    }

    /// Replaces variable `k` by the affine expression `e`.
    fn substitute(&mut self, k: usize, e: &Row) {
        let a = std::mem::take(&mut self.coeffs[k]);
        if a.is_zero() {
            return;
        }
        for (c, ec) in self.coeffs.iter_mut().zip(&e.coeffs) {
            if !ec.is_zero() {
                *c += &a * ec;
            }
        }
        self.constant += &a * &e.constant;
    }

    fn widen(&mut self, n: usize) {
        self.coeffs.resize(n, Int::zero());
    }

    pub(crate) fn negated(&self) -> Row {
        Row {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            constant: -&self.constant,
        }
    }
}

/// Conjunction of `eqs[i] = 0` and `geqs[j] >= 0` over `nvars` integer variables.
#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub nvars: usize,
    pub eqs: Vec<Row>,
    pub geqs: Vec<Row>,
}

#[derive(Debug)]
pub(crate) struct Exhausted;

/// Step counter shared by one decision-procedure invocation.
pub(crate) struct Budget {
    pub remaining: u64,
}

impl Budget {
    pub fn tick(&mut self) -> Result<(), Exhausted> {
        if self.remaining == 0 {
            return Err(Exhausted);
        }
        self.remaining -= 1;
        Ok(())
    }
}

/// Returns an integer solution (one value per variable) or `None` when the
/// problem has no integer solution.
pub(crate) fn solve(p: Problem, budget: &mut Budget) -> Result<Option<Vec<Int>>, Exhausted> {
    budget.tick()?;
    let Problem {
        nvars,
        mut eqs,
        mut geqs,
    } = p;

    // Normalize equalities.
    let mut i = 0;
    while i < eqs.len() {
        let g = eqs[i].gcd();
        if g.is_zero() {
            if !eqs[i].constant.is_zero() {
                return Ok(None);
            }
            eqs.swap_remove(i);
            continue;
        }
        if !eqs[i].constant.is_multiple_of(&g) {
            return Ok(None);
        }
        if !g.is_one() {
            let row = &mut eqs[i];
            row.coeffs.iter_mut().for_each(|c| *c /= &g);
            row.constant /= &g;
        }
        i += 1;
    }

    // Normalize inequalities, tightening constants.
    let mut i = 0;
    while i < geqs.len() {
        let g = geqs[i].gcd();
        if g.is_zero() {
            if geqs[i].constant.is_negative() {
                return Ok(None);
            }
            geqs.swap_remove(i);
            continue;
        }
        if !g.is_one() {
            let row = &mut geqs[i];
            row.coeffs.iter_mut().for_each(|c| *c /= &g);
            row.constant = row.constant.div_floor(&g);
        }
        i += 1;
    }

    if let Some(eq) = eqs.pop() {
        return eliminate_equality(nvars, eq, eqs, geqs, budget);
    }

    // Keep the tightest constant per coefficient vector and look for
    // opposite pairs that collapse to an equality or a contradiction.
    let mut tightest: HashMap<Vec<Int>, Int> = HashMap::new();
    let mut order: Vec<Vec<Int>> = Vec::new();
    for row in geqs {
        match tightest.get_mut(&row.coeffs) {
            Some(c) => {
                if row.constant < *c {
                    *c = row.constant;
                }
            }
            None => {
                order.push(row.coeffs.clone());
                tightest.insert(row.coeffs, row.constant);
            }
        }
    }
    let mut new_eqs = Vec::new();
    for coeffs in &order {
        let neg: Vec<Int> = coeffs.iter().map(|c| -c).collect();
        if let (Some(c1), Some(c2)) = (tightest.get(coeffs), tightest.get(&neg)) {
            let sum = c1 + c2;
            if sum.is_negative() {
                return Ok(None);
            }
            if sum.is_zero() && coeffs.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_positive()) {
                new_eqs.push(Row {
                    coeffs: coeffs.clone(),
                    constant: c1.clone(),
                });
            }
        }
    }
    let geqs: Vec<Row> = order
        .into_iter()
        .map(|coeffs| {
            let constant = tightest[&coeffs].clone();
            Row { coeffs, constant }
        })
        .collect();
    if !new_eqs.is_empty() {
        return solve(
            Problem {
                nvars,
                eqs: new_eqs,
                geqs,
            },
            budget,
        );
    }
    if geqs.is_empty() {
        return Ok(Some(vec![Int::zero(); nvars]));
    }
    eliminate_inequalities(nvars, geqs, budget)
}

fn mod_hat(a: &Int, m: &Int) -> Int {
    // a - m * floor(a/m + 1/2)
    let two = Int::from(2);
    a - m * (&two * a + m).div_floor(&(&two * m))
}

fn eliminate_equality(
    nvars: usize,
    eq: Row,
    mut eqs: Vec<Row>,
    mut geqs: Vec<Row>,
    budget: &mut Budget,
) -> Result<Option<Vec<Int>>, Exhausted> {
    let (k, ak) = eq
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .min_by(|a, b| a.1.abs().cmp(&b.1.abs()))
        .map(|(k, c)| (k, c.clone()))
        .expect("normalized equality has a variable");

    if ak.abs().is_one() {
        // x_k = -ak * (rest + c) since ak = +-1
        let mut expr = eq.clone();
        expr.coeffs[k] = Int::zero();
        let expr = if ak.is_positive() { expr.negated() } else { expr };
        for row in eqs.iter_mut().chain(geqs.iter_mut()) {
            row.substitute(k, &expr);
        }
        let sol = solve(Problem { nvars, eqs, geqs }, budget)?;
        return Ok(sol.map(|mut x| {
            x[k] = expr.eval(&x);
            x
        }));
    }

    // Introduce sigma with m*sigma = sum(mod_hat(a_i) x_i) + mod_hat(c), and
    // since mod_hat(a_k) = -sign(a_k), solve it for x_k.
    let m = ak.abs() + Int::one();
    let sigma = nvars;
    let nvars = nvars + 1;
    let sign = if ak.is_positive() { Int::one() } else { -Int::one() };
    let mut expr = Row {
        coeffs: eq.coeffs.iter().map(|a| mod_hat(a, &m)).collect(),
        constant: mod_hat(&eq.constant, &m),
    };
    expr.widen(nvars);
    expr.coeffs[k] = Int::zero();
    expr.coeffs[sigma] = -m;
    // x_k = -sign * (m*sigma - rest) = sign * (rest - m*sigma)
    let expr = if sign.is_positive() {
        expr
    } else {
        expr.negated()
    };
    let mut eq = eq;
    for row in eqs.iter_mut().chain(geqs.iter_mut()).chain(std::iter::once(&mut eq)) {
        row.widen(nvars);
        row.substitute(k, &expr);
    }
    eqs.push(eq);
    let sol = solve(Problem { nvars, eqs, geqs }, budget)?;
    Ok(sol.map(|mut x| {
        x[k] = expr.eval(&x);
        x.truncate(nvars - 1);
        x
    }))
}

enum Choice {
    /// Bounded on at most one side: drop every constraint on it.
    Unbounded(usize),
    Exact(usize),
    Inexact(usize),
}

fn choose_variable(nvars: usize, geqs: &[Row]) -> Choice {
    let mut best_exact: Option<(usize, usize)> = None;
    let mut best_inexact: Option<(usize, usize)> = None;
    for j in 0..nvars {
        let mut lowers = 0usize;
        let mut uppers = 0usize;
        let mut unit_lowers = true;
        let mut unit_uppers = true;
        for row in geqs {
            let c = &row.coeffs[j];
            if c.is_positive() {
                lowers += 1;
                unit_lowers &= c.is_one();
            } else if c.is_negative() {
                uppers += 1;
                unit_uppers &= (-c).is_one();
            }
        }
        if lowers + uppers == 0 {
            continue;
        }
        if lowers == 0 || uppers == 0 {
            return Choice::Unbounded(j);
        }
        let cost = lowers * uppers;
        let slot = if unit_lowers || unit_uppers {
            &mut best_exact
        } else {
            &mut best_inexact
        };
        if slot.is_none_or(|(_, c)| cost < c) {
            *slot = Some((j, cost));
        }
    }
    match (best_exact, best_inexact) {
        (Some((j, _)), _) => Choice::Exact(j),
        (None, Some((j, _))) => Choice::Inexact(j),
        (None, None) => unreachable!("non-constant inequalities mention some variable"),
    }
}

/// Bounds on `x_j` implied by the rows, evaluated at `x`.
fn pick_value(j: usize, rows: &[Row], x: &[Int]) -> Int {
    let mut lo: Option<Int> = None;
    let mut hi: Option<Int> = None;
    for row in rows {
        let a = &row.coeffs[j];
        if a.is_zero() {
            continue;
        }
        // a*x_j + rest >= 0
        let mut rest_row = row.clone();
        rest_row.coeffs[j] = Int::zero();
        let rest = rest_row.eval(x);
        if a.is_positive() {
            // x_j >= ceil(-rest / a)
            let b = (-rest).div_ceil(a);
            if lo.as_ref().is_none_or(|l| &b > l) {
                lo = Some(b);
            }
        } else {
            // x_j <= floor(rest / -a)
            let b = rest.div_floor(&-a);
            if hi.as_ref().is_none_or(|h| &b < h) {
                hi = Some(b);
            }
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) => {
            debug_assert!(l <= h, "empty integer range for eliminated variable");
            l
        }
        (Some(l), None) => l,
        (None, Some(h)) => h,
        (None, None) => Int::zero(),
    }
}

fn eliminate_inequalities(
    nvars: usize,
    geqs: Vec<Row>,
    budget: &mut Budget,
) -> Result<Option<Vec<Int>>, Exhausted> {
    let j = match choose_variable(nvars, &geqs) {
        Choice::Unbounded(j) => {
            let (on_j, rest): (Vec<Row>, Vec<Row>) =
                geqs.into_iter().partition(|r| !r.coeffs[j].is_zero());
            let sol = solve(
                Problem {
                    nvars,
                    eqs: Vec::new(),
                    geqs: rest,
                },
                budget,
            )?;
            return Ok(sol.map(|mut x| {
                x[j] = pick_value(j, &on_j, &x);
                x
            }));
        }
        Choice::Exact(j) => {
            let shadow = shadow(j, &geqs, false);
            let sol = solve(
                Problem {
                    nvars,
                    eqs: Vec::new(),
                    geqs: shadow,
                },
                budget,
            )?;
            return Ok(sol.map(|mut x| {
                x[j] = pick_value(j, &geqs, &x);
                x
            }));
        }
        Choice::Inexact(j) => j,
    };

    let dark = shadow(j, &geqs, true);
    if let Some(mut x) = solve(
        Problem {
            nvars,
            eqs: Vec::new(),
            geqs: dark,
        },
        budget,
    )? {
        x[j] = pick_value(j, &geqs, &x);
        return Ok(Some(x));
    }

    let real = shadow(j, &geqs, false);
    if solve(
        Problem {
            nvars,
            eqs: Vec::new(),
            geqs: real,
        },
        budget,
    )?
    .is_none()
    {
        return Ok(None);
    }

    // Grey shadow: any integer solution outside the dark shadow lies close to
    // some lower bound a*x_j >= -L, namely a*x_j = -L + i for a small i.
    let max_upper = geqs
        .iter()
        .filter(|r| r.coeffs[j].is_negative())
        .map(|r| -&r.coeffs[j])
        .max()
        .expect("inexact elimination has upper bounds");
    for lower in geqs.iter().filter(|r| r.coeffs[j].is_positive()) {
        let a = &lower.coeffs[j];
        let limit = (a * &max_upper - a - &max_upper).div_floor(&max_upper);
        let mut i = Int::zero();
        while i <= limit {
            let mut eq = lower.clone();
            eq.constant -= &i;
            if let Some(x) = solve(
                Problem {
                    nvars,
                    eqs: vec![eq],
                    geqs: geqs.clone(),
                },
                budget,
            )? {
                return Ok(Some(x));
            }
            i += Int::one();
        }
    }
    Ok(None)
}

/// Fourier-Motzkin combination of every lower/upper pair on `x_j`. With
/// `dark`, each combination is strengthened by `(a-1)(b-1)`.
fn shadow(j: usize, geqs: &[Row], dark: bool) -> Vec<Row> {
    let mut out = Vec::new();
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for row in geqs {
        let c = &row.coeffs[j];
        if c.is_positive() {
            lowers.push(row);
        } else if c.is_negative() {
            uppers.push(row);
        } else {
            out.push(row.clone());
        }
    }
    for l in &lowers {
        let a = &l.coeffs[j];
        for u in &uppers {
            let b = -&u.coeffs[j];
            // b*(a x + L) + a*(-b x + U) = b L + a U >= 0
            let mut coeffs: Vec<Int> = l
                .coeffs
                .iter()
                .zip(&u.coeffs)
                .map(|(lc, uc)| &b * lc + a * uc)
                .collect();
            coeffs[j] = Int::zero();
            let mut constant = &b * &l.constant + a * &u.constant;
            if dark {
                constant -= (a - Int::one()) * (&b - Int::one());
            }
            out.push(Row { coeffs, constant });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coeffs: &[i64], constant: i64) -> Row {
        Row {
            coeffs: coeffs.iter().map(|&c| Int::from(c)).collect(),
            constant: Int::from(constant),
        }
    }

    fn run(nvars: usize, eqs: Vec<Row>, geqs: Vec<Row>) -> Option<Vec<Int>> {
        let p = Problem {
            nvars,
            eqs: eqs.clone(),
            geqs: geqs.clone(),
        };
        let sol = solve(p, &mut Budget { remaining: 1_000_000 }).unwrap();
        if let Some(x) = &sol {
            assert_eq!(x.len(), nvars);
            for e in &eqs {
                assert!(e.eval(x).is_zero(), "equality violated by {x:?}");
            }
            for g in &geqs {
                assert!(!g.eval(x).is_negative(), "inequality violated by {x:?}");
            }
        }
        sol
    }

    #[test]
    fn parity_is_unsat() {
        // 2x - 1 = 0
        assert!(run(1, vec![row(&[2], -1)], vec![]).is_none());
    }

    #[test]
    fn non_unit_equalities_are_solved() {
        // 3x + 5y = 7, both in [-10, 10]
        let mut geqs = Vec::new();
        for k in 0..2 {
            let mut lo = vec![0; 2];
            lo[k] = 1;
            geqs.push(row(&lo, 10));
            let mut hi = vec![0; 2];
            hi[k] = -1;
            geqs.push(row(&hi, 10));
        }
        assert!(run(2, vec![row(&[3, 5], -7)], geqs).is_some());
        // 6x + 10y = 7 has no integer solution (gcd 2)
        assert!(run(2, vec![row(&[6, 10], -7)], vec![]).is_none());
    }

    #[test]
    fn real_but_not_integer_feasible() {
        // 27 <= 11x + 13y <= 45, -10 <= 7x - 9y <= 4
        let geqs = vec![
            row(&[11, 13], -27),
            row(&[-11, -13], 45),
            row(&[7, -9], 10),
            row(&[-7, 9], 4),
        ];
        assert!(run(2, vec![], geqs).is_none());
    }

    #[test]
    fn grey_shadow_finds_solution() {
        // 3y <= 2x <= 3y + 1 with x fixed
        let geqs = vec![
            row(&[2, -3], 0),
            row(&[-2, 3], 1),
            row(&[1, 0], -1),
            row(&[-1, 0], 1),
        ];
        // x = 1 -> 3y <= 2 <= 3y + 1 -> y in [1/3, 2/3]: no integer
        assert!(run(2, vec![], geqs.clone()).is_none());
        let geqs = vec![
            row(&[2, -3], 0),
            row(&[-2, 3], 1),
            row(&[1, 0], -2),
            row(&[-1, 0], 2),
        ];
        // x = 2 -> 3y <= 4 <= 3y+1 -> y = 1
        assert_eq!(run(2, vec![], geqs), Some(vec![Int::from(2), Int::from(1)]));
    }

    #[test]
    fn mod_hat_matches_definition() {
        for a in -20i64..=20 {
            for m in 2i64..=7 {
                let r = mod_hat(&Int::from(a), &Int::from(m));
                let r = i64::try_from(&r).unwrap();
                assert_eq!((a - r).rem_euclid(m), 0);
                assert!(2 * r >= -m && 2 * r < m, "a={a} m={m} r={r}");
            }
        }
    }
}
