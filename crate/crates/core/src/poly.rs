//! Polynomials r_a(x) of total degree ≤ d in n variables without constant term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Monomials of total degree 1..=d in graded lexicographic order
/// (x before y: x, y, x², xy, y², x³, …).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialBasis {
    n_vars: usize,
    degree: usize,
    terms: Vec<Vec<u32>>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All exponent vectors of length `n` summing to `total`, lexicographically
/// descending (first variable's exponent largest first).
fn exponents_of_degree(n: usize, total: u32) -> Vec<Vec<u32>> {
    if n == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in (0..=total).rev() {
        for mut rest in exponents_of_degree(n - 1, total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl MonomialBasis {
    pub fn new(n_vars: usize, degree: usize) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::InvalidArgument("polynomial needs at least one variable".into()));
        }
        let terms: Vec<Vec<u32>> = (1..=degree as u32)
            .flat_map(|t| exponents_of_degree(n_vars, t))
            .collect();
        debug_assert_eq!(terms.len(), binomial(degree + n_vars, n_vars) - 1);
        Ok(Self { n_vars, degree, terms })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[Vec<u32>] {
        &self.terms
    }

    /// Number of coefficients N = C(d+n, n) − 1.
    pub fn size(&self) -> usize {
        self.terms.len()
    }

    /// Writes every monomial evaluated at `x` into `out` (length `size()`).
    /// Allocation-free for up to 4 variables and degree 15.
    pub fn monomials_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_vars);
        debug_assert_eq!(out.len(), self.terms.len());
        const MAXV: usize = 4;
        const MAXD: usize = 16;
        if self.n_vars <= MAXV && self.degree < MAXD {
            let mut pow = [[1.0f64; MAXD]; MAXV];
            for (v, &xv) in x.iter().enumerate() {
                for e in 1..=self.degree {
                    pow[v][e] = pow[v][e - 1] * xv;
                }
            }
            for (o, term) in out.iter_mut().zip(&self.terms) {
                let mut m = 1.0;
                for (v, &e) in term.iter().enumerate() {
                    m *= pow[v][e as usize];
                }
                *o = m;
            }
        } else {
            for (o, term) in out.iter_mut().zip(&self.terms) {
                *o = term.iter().zip(x).map(|(&e, &xv)| xv.powi(e as i32)).product();
            }
        }
    }

    /// The gradient of a ↦ r_a(x): the vector of monomials at x.
    pub fn coeff_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut out = vec![0.0; self.size()];
        self.monomials_into(x, &mut out);
        Ok(out)
    }

    /// r_a(x) = ⟨a, monomials(x)⟩.
    pub fn eval(&self, a: &[f64], x: &[f64]) -> Result<f64> {
        if a.len() != self.size() {
            return Err(Error::DimensionMismatch { expected: self.size(), got: a.len() });
        }
        let m = self.coeff_gradient(x)?;
        Ok(dot(a, &m))
    }

    /// Labels such as "x", "xy", "x^2y" in term order. Variables beyond the
    /// third are named x1, x2, ….
    pub fn term_labels(&self) -> Vec<String> {
        let names: Vec<String> = if self.n_vars <= 3 {
            ["x", "y", "z"][..self.n_vars].iter().map(|s| s.to_string()).collect()
        } else {
            (1..=self.n_vars).map(|i| format!("x{i}")).collect()
        };
        self.terms
            .iter()
            .map(|term| {
                let mut s = String::new();
                for (name, &e) in names.iter().zip(term) {
                    match e {
                        0 => {}
                        1 => s.push_str(name),
                        _ => s.push_str(&format!("{name}^{e}")),
                    }
                }
                s
            })
            .collect()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_vars {
            return Err(Error::DimensionMismatch { expected: self.n_vars, got: x.len() });
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
