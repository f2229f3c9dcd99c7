use std::cmp::Ordering;

use super::{irreducible_blocks, unitarily_equivalent, LinearPencil};
use crate::domination::{dominates, is_bounded};
use crate::error::{Error, Result};

/// Unitary invariants used to order blocks deterministically.
fn fingerprint(l: &LinearPencil) -> Vec<f64> {
    let a = l.coeffs();
    let mut f = vec![l.size() as f64];
    f.extend(a.iter().map(|m| m.trace()));
    for (i, x) in a.iter().enumerate() {
        for y in &a[i..] {
            f.push((x * y).trace());
        }
    }
    f
}

fn canonical_order(a: &LinearPencil, b: &LinearPencil) -> Ordering {
    let (fa, fb) = (fingerprint(a), fingerprint(b));
    for (x, y) in fa.iter().zip(&fb) {
        if (x - y).abs() > 1e-9 * (1.0 + x.abs().max(y.abs())) {
            return x.total_cmp(y);
        }
    }
    Ordering::Equal
}

/// Block decomposition, duplicate removal, then greedy deletion of any block
/// whose removal keeps the solution set. Since `D_L = D_rest ∩ D_b`, block
/// `b` can go iff `D_rest ⊆ D_b`; testing against `b` alone keeps the Choi
/// system away from the faces where `rest` and `L` coincide.
pub fn minimal_defining_pencil(l: &LinearPencil) -> Result<LinearPencil> {
    l.require_monic()?;
    if !is_bounded(l)? {
        return Err(Error::PreconditionUnbounded);
    }
    let mut uniq: Vec<LinearPencil> = Vec::new();
    for b in irreducible_blocks(l)? {
        let mut seen = false;
        for u in &uniq {
            if u.size() == b.size() && unitarily_equivalent(u, &b)?.is_equivalent() {
                seen = true;
                break;
            }
        }
        if !seen {
            uniq.push(b);
        }
    }
    uniq.sort_by(canonical_order);
    let mut i = 0;
    while i < uniq.len() && uniq.len() > 1 {
        let rest: Vec<LinearPencil> =
            uniq.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, p)| p.clone()).collect();
        let rem = LinearPencil::direct_sum_all(&rest)?;
        if is_bounded(&rem)? && dominates(&rem, &uniq[i])? {
            uniq.remove(i);
        } else {
            i += 1;
        }
    }
    LinearPencil::direct_sum_all(&uniq)
}
