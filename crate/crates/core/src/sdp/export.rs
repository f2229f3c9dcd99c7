use std::fmt::Write;

use super::{BlockKind, SdpProblem};

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the problem in SDPA sparse format. SDPA's dual form
/// `max ⟨F₀,Y⟩ s.t. ⟨Fᵢ,Y⟩ = cᵢ` matches ours with `F₀ = −C`, `Fᵢ = Aᵢ`,
/// `cᵢ = bᵢ`. LP blocks are written with negative sizes.
pub fn write_sdpa(p: &SdpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\"exported by ncert\"");
    let _ = writeln!(out, "{}", p.num_constraints());
    let _ = writeln!(out, "{}", p.blocks().len());
    let sizes: Vec<String> = p
        .blocks()
        .iter()
        .map(|b| match b.kind {
            BlockKind::Psd => b.size.to_string(),
            BlockKind::Lp => format!("-{}", b.size),
        })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let rhs: Vec<String> = p.rhs().iter().map(|&b| num(b)).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));
    for (b, i, j, v) in p.objective().entries() {
        let _ = writeln!(out, "0 {} {} {} {}", b + 1, i + 1, j + 1, num(-v));
    }
    for (k, a) in p.constraints().iter().enumerate() {
        for (b, i, j, v) in a.entries() {
            let _ = writeln!(out, "{} {} {} {} {}", k + 1, b + 1, i + 1, j + 1, num(v));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{Block, SparseSym};

    #[test]
    fn sdpa_layout() {
        let mut p = SdpProblem::new(vec![Block::psd(2), Block::lp(1)]);
        let mut c = SparseSym::new();
        c.add_entry(0, 0, 0, 1.0);
        p.set_objective(c);
        let mut a = SparseSym::new();
        a.add_entry(0, 0, 1, 0.1);
        a.add_entry(1, 0, 0, 1.0);
        p.add_constraint(a, 1.0);
        let s = write_sdpa(&p);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "2");
        assert_eq!(lines[3], "2 -1");
        assert_eq!(lines[5], "0 1 1 1 -1.0000000000000000e0");
        assert_eq!(lines[6], "1 1 1 2 1.0000000000000001e-1");
        assert_eq!(lines.len(), 8);
        // 17 significant digits round-trip
        let v: f64 = lines[6].split_whitespace().last().unwrap().parse().unwrap();
        assert_eq!(v, 0.1);
    }
}
