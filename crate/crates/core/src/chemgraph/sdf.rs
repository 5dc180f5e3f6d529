//! Minimal V2000 molfile/SDF reader: counts line, atom block, bond block,
//! `M  END`, `$$$$` record separators. Implicit hydrogens are materialized
//! from the valence table; aromatic bond codes and charged records are
//! rejected.

use crate::error::{Error, Result};

use super::{materialize_hydrogens, Bond, ChemicalGraph, Element};

/// Parses every record of an SDF stream, preserving record order.
pub fn parse_sdf(input: &str) -> Result<Vec<ChemicalGraph>> {
    let mut out = Vec::new();
    for (i, block) in split_records(input).into_iter().enumerate() {
        let g = parse_record(block).map_err(|e| Error::Sdf(format!("record {}: {e}", i + 1)))?;
        out.push(g);
    }
    Ok(out)
}

/// Splits an SDF stream into molfile blocks on `$$$$` lines.
pub(crate) fn split_records(input: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut pos = 0;
    for line in input.split_inclusive('\n') {
        let end = pos + line.len();
        if line.trim_end() == "$$$$" {
            blocks.push(&input[start..pos]);
            start = end;
        }
        pos = end;
    }
    if !input[start..].trim().is_empty() {
        blocks.push(&input[start..]);
    }
    blocks
}

/// Parses a single molfile block (header + ctab, no `$$$$`).
pub(crate) fn parse_record(block: &str) -> Result<ChemicalGraph> {
    let mut lines = block.lines();
    let name = lines
        .next()
        .ok_or_else(|| Error::Sdf("empty record".into()))?
        .trim()
        .to_string();
    lines
        .next()
        .ok_or_else(|| Error::Sdf("missing program line".into()))?;
    lines
        .next()
        .ok_or_else(|| Error::Sdf("missing comment line".into()))?;
    let counts = lines
        .next()
        .ok_or_else(|| Error::Sdf("missing counts line".into()))?;
    let (n_atoms, n_bonds) = parse_counts(counts)?;

    let mut symbols = Vec::with_capacity(n_atoms);
    for i in 0..n_atoms {
        let line = lines
            .next()
            .ok_or_else(|| Error::Sdf(format!("truncated atom block at atom {}", i + 1)))?;
        symbols.push(parse_atom_symbol(line)?);
    }
    let mut raw_bonds = Vec::with_capacity(n_bonds);
    for i in 0..n_bonds {
        let line = lines
            .next()
            .ok_or_else(|| Error::Sdf(format!("truncated bond block at bond {}", i + 1)))?;
        raw_bonds.push(parse_bond(line, n_atoms)?);
    }
    for line in lines {
        let tag = line.trim_end();
        if tag.starts_with("M  CHG") {
            return Err(Error::Sdf(
                "charged records are unsupported (M  CHG present)".into(),
            ));
        }
        if tag == "M  END" {
            break;
        }
    }

    // Resolve element variants now that bond order sums are known: for a
    // multi-valence element take the smallest variant that fits.
    let mut bsum = vec![0u32; n_atoms];
    for &(u, v, m) in &raw_bonds {
        bsum[u] += u32::from(m);
        bsum[v] += u32::from(m);
    }
    let mut atoms = Vec::with_capacity(n_atoms);
    for (i, sym) in symbols.iter().enumerate() {
        atoms.push(Element::lookup_at_least(sym, bsum[i])?);
    }
    let bonds = raw_bonds
        .into_iter()
        .map(|(u, v, m)| Bond { u, v, order: m })
        .collect();
    materialize_hydrogens(&name, atoms, bonds)
}

fn parse_counts(line: &str) -> Result<(usize, usize)> {
    let field = |range: std::ops::Range<usize>| -> Result<usize> {
        line.get(range.clone())
            .map(str::trim)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Sdf(format!("malformed counts line {line:?}")))
    };
    if line.len() < 6 {
        return Err(Error::Sdf(format!("malformed counts line {line:?}")));
    }
    let na = field(0..3)?;
    let nb = field(3..6)?;
    if let Some(version) = line.get(33..39).map(str::trim) {
        if !version.is_empty() && version != "V2000" {
            return Err(Error::Sdf(format!("unsupported ctab version {version:?}")));
        }
    }
    Ok((na, nb))
}

fn parse_atom_symbol(line: &str) -> Result<String> {
    // Fixed columns first (x,y,z occupy 30 chars, symbol is cols 31..34),
    // then a whitespace fallback for hand-written files.
    let sym = match line.get(31..34) {
        Some(s) if !s.trim().is_empty() => s.trim().to_string(),
        _ => line
            .split_whitespace()
            .nth(3)
            .map(str::to_string)
            .ok_or_else(|| Error::Sdf(format!("malformed atom line {line:?}")))?,
    };
    Ok(sym)
}

fn parse_bond(line: &str, n_atoms: usize) -> Result<(usize, usize, u8)> {
    let nums: Vec<usize> = if line.len() >= 9 {
        [0..3, 3..6, 6..9]
            .into_iter()
            .map(|r| {
                line.get(r)
                    .map(str::trim)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Sdf(format!("malformed bond line {line:?}")))
            })
            .collect::<Result<_>>()?
    } else {
        let toks: Vec<usize> = line
            .split_whitespace()
            .take(3)
            .filter_map(|t| t.parse().ok())
            .collect();
        if toks.len() < 3 {
            return Err(Error::Sdf(format!("malformed bond line {line:?}")));
        }
        toks
    };
    let (i, j, code) = (nums[0], nums[1], nums[2]);
    if i == 0 || j == 0 || i > n_atoms || j > n_atoms {
        return Err(Error::Sdf(format!(
            "bond ({i}, {j}) references a vertex out of range"
        )));
    }
    let order = match code {
        1..=3 => code as u8,
        4 => {
            return Err(Error::Sdf(
                "aromatic bonds unsupported; supply kekulized input".into(),
            ))
        }
        _ => return Err(Error::Sdf(format!("unsupported bond code {code}"))),
    };
    Ok((i - 1, j - 1, order))
}

/// Writes one molecule as a V2000 molfile block with `$$$$` terminator.
/// Coordinates are zeroed; explicit hydrogens are written out.
pub fn write_sdf_record(g: &ChemicalGraph) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "{}", g.name());
    out.push_str("  moldesc\n\n");
    let _ = writeln!(
        out,
        "{:3}{:3}  0  0  0  0  0  0  0  0999 V2000",
        g.n_atoms(),
        g.bonds().len()
    );
    for v in 0..g.n_atoms() {
        let _ = writeln!(
            out,
            "    0.0000    0.0000    0.0000 {:<3} 0  0  0  0  0  0  0  0  0  0  0  0",
            g.element(v).symbol()
        );
    }
    for b in g.bonds() {
        let _ = writeln!(out, "{:3}{:3}{:3}  0  0  0  0", b.u + 1, b.v + 1, b.order);
    }
    out.push_str("M  END\n$$$$\n");
    out
}

/// Writes a full SDF stream.
pub fn write_sdf(mols: &[ChemicalGraph]) -> String {
    mols.iter().map(write_sdf_record).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const BENZENE: &str = "benzene
  test

  6  6  0  0  0  0  0  0  0  0999 V2000
    0.0000    1.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.8660    0.5000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.8660   -0.5000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.0000   -1.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
   -0.8660   -0.5000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
   -0.8660    0.5000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  2  0  0  0  0
  2  3  1  0  0  0  0
  3  4  2  0  0  0  0
  4  5  1  0  0  0  0
  5  6  2  0  0  0  0
  6  1  1  0  0  0  0
M  END
$$$$
";

    #[test]
    fn benzene_materializes_six_hydrogens() {
        let mols = parse_sdf(BENZENE).unwrap();
        assert_eq!(mols.len(), 1);
        let g = &mols[0];
        assert_eq!(g.name(), "benzene");
        assert_eq!(g.n_atoms(), 12);
        assert_eq!(g.n_heavy(), 6);
        assert_eq!(g.bonds().len(), 12);
    }

    #[test]
    fn aromatic_bond_code_rejected() {
        let bad = BENZENE.replace("  1  2  2", "  1  2  4");
        let err = parse_sdf(&bad).unwrap_err();
        assert!(err.to_string().contains("aromatic"), "{err}");
    }

    #[test]
    fn charged_record_rejected() {
        let bad = BENZENE.replace("M  END", "M  CHG  1   1   1\nM  END");
        assert!(parse_sdf(&bad).is_err());
    }

    #[test]
    fn malformed_counts_line_rejected() {
        let bad = BENZENE.replace("  6  6  0", "  x  6  0");
        assert!(parse_sdf(&bad).is_err());
    }

    #[test]
    fn unknown_element_rejected() {
        let bad = BENZENE.replace(
            " C   0  0  0  0  0  0  0  0  0  0  0  0\n  1",
            " Xq  0  0  0  0  0  0  0  0  0  0  0  0\n  1",
        );
        assert!(parse_sdf(&bad).is_err());
    }

    #[test]
    fn record_order_preserved() {
        let two = format!("{BENZENE}{}", BENZENE.replace("benzene", "benzene2"));
        let mols = parse_sdf(&two).unwrap();
        assert_eq!(mols.len(), 2);
        assert_eq!(mols[0].name(), "benzene");
        assert_eq!(mols[1].name(), "benzene2");
    }
}
