use std::fmt;

use num_bigint::BigInt;

use super::{Letter, MatrixTuple, NcPoly, VariableContext, Word};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rat::Rat;

/// A polynomial in the doubled alphabet `(x₁..x_g, h₁..h_g)` produced by
/// directional differentiation; homogeneous of degree `order` in `h`.
///
/// Letter `j < g` is `xⱼ`, letter `g + j` is `hⱼ`.
#[derive(Clone, PartialEq, Eq)]
pub struct BiPoly {
    poly: NcPoly,
    g: usize,
    order: usize,
}

impl BiPoly {
    pub fn poly(&self) -> &NcPoly {
        &self.poly
    }

    pub fn into_poly(self) -> NcPoly {
        self.poly
    }

    pub fn g(&self) -> usize {
        self.g
    }

    /// Degree in the `h` letters.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_h_letter(&self, l: Letter) -> bool {
        l.var >= self.g
    }

    pub fn h_degree(&self, w: &Word) -> usize {
        w.letters().iter().filter(|l| l.var >= self.g).count()
    }

    /// `p⁽ᵏ⁾(X)[H]`.
    pub fn evaluate(&self, x: &MatrixTuple, h: &MatrixTuple) -> Result<Mat> {
        self.poly.evaluate(&x.concat(h)?)
    }

    /// Builds a `BiPoly` from a polynomial already in the doubled context.
    pub fn from_doubled(poly: NcPoly, g: usize, order: usize) -> Result<Self> {
        if poly.context().g() != 2 * g {
            return Err(Error::ContextMismatch);
        }
        Ok(Self { poly, g, order })
    }
}

impl fmt::Display for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = self.g;
        let name = move |v: usize| -> String {
            match (g, v < g) {
                (1, true) => "x".into(),
                (1, false) => "h".into(),
                (_, true) => format!("x{}", v + 1),
                (_, false) => format!("h{}", v - g + 1),
            }
        };
        f.write_str(&self.poly.format_with(&name))
    }
}

impl fmt::Debug for BiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiPoly(order {}: {})", self.order, self)
    }
}

fn factorial(k: usize) -> Rat {
    Rat::from_integer((1..=k).fold(BigInt::from(1), |a, b| a * BigInt::from(b)))
}

/// Visits every `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        let need = k - cur.len();
        for i in start..=n - need {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), f);
    }
}

impl NcPoly {
    /// The doubled context `(x, h)` of the same kind.
    pub fn doubled_context(&self) -> VariableContext {
        VariableContext::new(2 * self.context().g(), self.context().kind()).expect("g >= 1")
    }

    /// `p⁽ᵏ⁾(x)[h] = dᵏ/dtᵏ p(x + t h)|_{t=0}` by exact expansion: every choice of
    /// `k` letter positions is replaced by the matching `h` letter (stars
    /// kept), weighted by `k!`.
    pub fn directional_derivative(&self, k: usize) -> Result<BiPoly> {
        if k == 0 {
            return Err(Error::InvalidInput("derivative order must be >= 1".into()));
        }
        let g = self.context().g();
        let ctx2 = self.doubled_context();
        let kfact = factorial(k);
        let mut out = NcPoly::zero(ctx2);
        for (w, c) in self.terms() {
            let coeff = c * &kfact;
            for_each_subset(w.len(), k, &mut |positions| {
                let mut letters = w.letters().to_vec();
                for &i in positions {
                    letters[i].var += g;
                }
                out.add_term(Word::new(letters), coeff.clone());
            });
        }
        Ok(BiPoly { poly: out, g, order: k })
    }

    /// Second directional derivative `p''(x)[h]`.
    pub fn hessian(&self) -> BiPoly {
        self.directional_derivative(2).expect("order 2 is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::parse;
    use crate::rat::rat;

    fn x_h_word(s: &str) -> Word {
        Word::from_vars(&s.bytes().map(|b| if b == b'x' { 0 } else { 1 }).collect::<Vec<_>>())
    }

    #[test]
    fn first_derivative_of_quartic() {
        let p = parse("x^4", VariableContext::symmetric(1)).unwrap();
        let d = p.directional_derivative(1).unwrap();
        assert_eq!(d.poly().num_terms(), 4);
        for w in ["hxxx", "xhxx", "xxhx", "xxxh"] {
            assert_eq!(d.poly().coeff(&x_h_word(w)), rat(1), "{w}");
        }
        assert_eq!(d.to_string(), "x^3*h + x^2*h*x + x*h*x^2 + h*x^3");
    }

    #[test]
    fn hessian_of_quartic() {
        let p = parse("x^4", VariableContext::symmetric(1)).unwrap();
        let d = p.hessian();
        assert_eq!(d.poly().num_terms(), 6);
        for w in ["hhxx", "hxhx", "hxxh", "xhhx", "xhxh", "xxhh"] {
            assert_eq!(d.poly().coeff(&x_h_word(w)), rat(2), "{w}");
        }
        assert!(d.poly().is_symmetric());
        assert!(d.poly().terms().all(|(w, _)| d.h_degree(w) == 2));
    }

    #[test]
    fn second_derivative_of_affine_is_zero() {
        let p = parse("3*x1 - x2 + 7", VariableContext::symmetric(2)).unwrap();
        assert!(p.directional_derivative(2).unwrap().poly().is_zero());
        assert!(p.directional_derivative(0).is_err());
    }

    #[test]
    fn third_derivative_of_cubic() {
        let p = parse("x^3", VariableContext::symmetric(1)).unwrap();
        let d = p.directional_derivative(3).unwrap();
        assert_eq!(d.poly().num_terms(), 1);
        assert_eq!(d.poly().coeff(&x_h_word("hhh")), rat(6));
    }

    #[test]
    fn free_derivative_keeps_stars() {
        let p = parse("x'*x", VariableContext::free(1)).unwrap();
        let d = p.directional_derivative(1).unwrap();
        let expected = parse("x2'*x1 + x1'*x2", VariableContext::free(2)).unwrap();
        assert_eq!(d.poly(), &expected);
    }
}
