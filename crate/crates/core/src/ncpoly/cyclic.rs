use super::{NcPoly, VariableKind, Word};

/// Lexicographically least rotation of `w`.
pub fn canonical_rotation(w: &Word) -> Word {
    let n = w.len();
    if n < 2 {
        return w.clone();
    }
    let letters = w.letters();
    let mut best: Option<Vec<_>> = None;
    for r in 0..n {
        let rot: Vec<_> = letters[r..].iter().chain(&letters[..r]).copied().collect();
        if best.as_ref().is_none_or(|b| rot < *b) {
            best = Some(rot);
        }
    }
    Word::new(best.unwrap())
}

/// Class key used when a cyclic identity is combined with the involution:
/// the least of the canonical rotations of `w` and `w*`.
pub fn cyclic_star_key(w: &Word, kind: VariableKind) -> Word {
    let a = canonical_rotation(w);
    let b = canonical_rotation(&w.involution(kind));
    a.min(b)
}

/// Sums coefficients over rotation classes onto the least rotation. Two
/// polynomials have equal normal forms iff their difference is a sum of
/// commutators.
pub fn cyclic_canonical(p: &NcPoly) -> NcPoly {
    NcPoly::from_terms(p.context(), p.terms().map(|(w, c)| (canonical_rotation(w), c.clone())))
}

/// `p ~cyc q`.
pub fn cyclically_equivalent(p: &NcPoly, q: &NcPoly) -> crate::Result<bool> {
    Ok(cyclic_canonical(&p.try_sub(q)?).is_zero())
}

impl NcPoly {
    pub fn cyclic_reduce(&self) -> NcPoly {
        cyclic_canonical(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::{parse, VariableContext};

    fn sym(g: usize, s: &str) -> NcPoly {
        parse(s, VariableContext::symmetric(g)).unwrap()
    }

    #[test]
    fn commutators_vanish() {
        assert!(sym(2, "x*y - y*x").cyclic_reduce().is_zero());
        let f = parse("x'*x - x*x'", VariableContext::free(1)).unwrap();
        assert!(f.cyclic_reduce().is_zero());
        assert!(sym(2, "x*y^2*x - x^2*y^2").cyclic_reduce().is_zero());
    }

    #[test]
    fn non_equivalent_are_kept() {
        let p = sym(2, "x^2 + y^2");
        assert_eq!(p.cyclic_reduce(), p);
        assert!(!cyclically_equivalent(&sym(2, "x*y*x*y"), &sym(2, "x^2*y^2")).unwrap());
        assert!(cyclically_equivalent(&sym(2, "y*x*y*x"), &sym(2, "x*y*x*y")).unwrap());
    }

    #[test]
    fn canonical_rotation_is_least() {
        let w = Word::from_vars(&[1, 0, 1, 0, 0]);
        assert_eq!(canonical_rotation(&w), Word::from_vars(&[0, 0, 1, 0, 1]));
        let kind = VariableKind::Symmetric;
        // x y y is the reverse of y y x, a rotation of x y y
        assert_eq!(cyclic_star_key(&Word::from_vars(&[1, 1, 0]), kind), Word::from_vars(&[0, 1, 1]));
    }
}
