//! Dataset ingestion, descriptor-dictionary construction, feature-matrix
//! assembly and file emission.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chemgraph::{self, ChemicalGraph, Element};
use crate::cycleconf::{self, CycleConfig};
use crate::error::{Error, Result};
use crate::twolayer::{self, AdjacencyConfig, EdgeConfig, TwoLayerSurvey};

/// A property dataset: molecules with observed property values.
#[derive(Debug)]
pub struct Dataset {
    pub molecules: Vec<(String, ChemicalGraph)>,
    pub values: BTreeMap<String, f64>,
    pub property_name: String,
    /// Records that could not be parsed into valid chemical graphs.
    pub skips: Vec<SkipRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkipRecord {
    pub id: String,
    pub reason: String,
}

/// Featurization parameters: branch parameter, cycle length window, the
/// available element set, and whether CC descriptors are collected.
#[derive(Debug, Clone)]
pub struct FeaturizeParams {
    pub rho: u32,
    pub c_min: usize,
    pub c_max: usize,
    /// Allowed elements (hydrogen is always allowed implicitly).
    pub lambda: Vec<Element>,
    pub with_cc: bool,
}

impl Default for FeaturizeParams {
    fn default() -> Self {
        FeaturizeParams {
            rho: 2,
            c_min: 4,
            c_max: 6,
            lambda: Element::all().collect(),
            with_cc: true,
        }
    }
}

/// Survey plus cycle-configuration counts of one kept molecule.
#[derive(Debug)]
pub struct MoleculeProfile {
    pub id: String,
    pub survey: TwoLayerSurvey,
    pub cc: BTreeMap<CycleConfig, u32>,
}

/// Computes the profile of a single molecule, applying no feasibility filter.
pub fn profile_molecule(
    id: &str,
    g: &ChemicalGraph,
    p: &FeaturizeParams,
) -> Result<MoleculeProfile> {
    let h = chemgraph::suppress_hydrogens(g)?;
    let survey = twolayer::survey(g, &h, p.rho)?;
    let cc = if p.with_cc {
        cycleconf::cycle_configurations(&h, &survey.fringe_mass, p.c_min, p.c_max)?
    } else {
        BTreeMap::new()
    };
    Ok(MoleculeProfile {
        id: id.to_string(),
        survey,
        cc,
    })
}

/// Profiles every dataset molecule, skipping the ones that are infeasible in
/// the two-layer model (too few heavy atoms, element outside the run's set,
/// suppressed degree over 4, no interior).
pub fn profile_dataset(
    ds: &Dataset,
    p: &FeaturizeParams,
) -> (Vec<MoleculeProfile>, Vec<SkipRecord>) {
    let mut profiles = Vec::new();
    let mut skips = ds.skips.clone();
    for (id, g) in &ds.molecules {
        if let Some(bad) = g
            .atoms()
            .iter()
            .find(|el| !el.is_hydrogen() && !p.lambda.contains(el))
        {
            skips.push(SkipRecord {
                id: id.clone(),
                reason: format!("element {bad} outside the run's element set"),
            });
            continue;
        }
        if g.n_heavy() < 4 {
            skips.push(SkipRecord {
                id: id.clone(),
                reason: format!("only {} heavy atoms (need at least 4)", g.n_heavy()),
            });
            continue;
        }
        match profile_molecule(id, g, p) {
            Ok(profile) => profiles.push(profile),
            Err(e) => skips.push(SkipRecord {
                id: id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    (profiles, skips)
}

/// Dataset-derived descriptor index sets with fixed integer encodings.
///
/// All lists are sorted under the fixed total orders, so list position is the
/// (0-based) encoding and serialization is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DescriptorDictionary {
    pub format: String,
    pub rho: u32,
    pub c_min: usize,
    pub c_max: usize,
    pub lambda_int: Vec<Element>,
    pub lambda_ex: Vec<Element>,
    pub gamma_int_ec: Vec<EdgeConfig>,
    pub fringe_codes: Vec<String>,
    pub gamma_lf_ac: Vec<AdjacencyConfig>,
    pub xi_set: Vec<CycleConfig>,
}

pub const DICTIONARY_FORMAT: &str = "descriptor-dictionary-v1";

impl DescriptorDictionary {
    pub fn k_2l(&self) -> usize {
        14 + self.lambda_int.len()
            + self.lambda_ex.len()
            + self.gamma_int_ec.len()
            + self.fringe_codes.len()
            + self.gamma_lf_ac.len()
    }

    pub fn k_cc(&self) -> usize {
        self.xi_set.len()
    }

    pub fn k_total(&self) -> usize {
        self.k_2l() + self.k_cc()
    }

    pub fn lambda_int(&self) -> &[Element] {
        &self.lambda_int
    }
    pub fn lambda_ex(&self) -> &[Element] {
        &self.lambda_ex
    }
    pub fn gamma_int_ec(&self) -> &[EdgeConfig] {
        &self.gamma_int_ec
    }
    pub fn fringe_codes(&self) -> &[String] {
        &self.fringe_codes
    }
    pub fn gamma_lf_ac(&self) -> &[AdjacencyConfig] {
        &self.gamma_lf_ac
    }
    pub fn xi_set(&self) -> &[CycleConfig] {
        &self.xi_set
    }

    pub fn lambda_int_index(&self, el: Element) -> Option<usize> {
        self.lambda_int.binary_search(&el).ok()
    }
    pub fn lambda_ex_index(&self, el: Element) -> Option<usize> {
        self.lambda_ex.binary_search(&el).ok()
    }
    pub fn gamma_int_ec_index(&self, ec: &EdgeConfig) -> Option<usize> {
        self.gamma_int_ec.binary_search(ec).ok()
    }
    pub fn fringe_index(&self, code: &str) -> Option<usize> {
        self.fringe_codes
            .binary_search_by(|c| c.as_str().cmp(code))
            .ok()
    }
    pub fn gamma_lf_ac_index(&self, ac: &AdjacencyConfig) -> Option<usize> {
        self.gamma_lf_ac.binary_search(ac).ok()
    }
    pub fn xi_index(&self, xi: &CycleConfig) -> Option<usize> {
        self.xi_set.binary_search(xi).ok()
    }

    /// Descriptor keys in emission order (2L blocks then the CC block).
    pub fn keys(&self) -> Vec<DescriptorKey> {
        let mut keys = vec![
            DescriptorKey::NHeavy,
            DescriptorKey::Rank,
            DescriptorKey::NInterior,
            DescriptorKey::AvgMass,
        ];
        for d in 1..=4 {
            keys.push(DescriptorKey::Dg(d));
        }
        for d in 1..=4 {
            keys.push(DescriptorKey::DgInt(d));
        }
        keys.push(DescriptorKey::BdInt(2));
        keys.push(DescriptorKey::BdInt(3));
        keys.extend(self.lambda_int.iter().map(|&e| DescriptorKey::NaInt(e)));
        keys.extend(self.lambda_ex.iter().map(|&e| DescriptorKey::NaEx(e)));
        keys.extend(self.gamma_int_ec.iter().map(|&e| DescriptorKey::Ec(e)));
        keys.extend(
            self.fringe_codes
                .iter()
                .map(|c| DescriptorKey::Fc(c.clone())),
        );
        keys.extend(self.gamma_lf_ac.iter().map(|&a| DescriptorKey::AcLf(a)));
        keys.extend(self.xi_set.iter().map(|x| DescriptorKey::Cc(x.clone())));
        keys
    }

    pub fn header(&self) -> Vec<String> {
        self.keys().iter().map(DescriptorKey::to_string).collect()
    }

    fn check_sorted(&self) -> Result<()> {
        fn sorted<T: Ord>(v: &[T]) -> bool {
            v.windows(2).all(|w| w[0] < w[1])
        }
        if sorted(&self.lambda_int)
            && sorted(&self.lambda_ex)
            && sorted(&self.gamma_int_ec)
            && sorted(&self.fringe_codes)
            && sorted(&self.gamma_lf_ac)
            && sorted(&self.xi_set)
        {
            Ok(())
        } else {
            Err(Error::Dataset(
                "dictionary lists are not sorted/deduplicated".into(),
            ))
        }
    }
}

/// One descriptor column, by role. The `Display` form is the column name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DescriptorKey {
    NHeavy,
    Rank,
    NInterior,
    AvgMass,
    Dg(u8),
    DgInt(u8),
    BdInt(u8),
    NaInt(Element),
    NaEx(Element),
    Ec(EdgeConfig),
    Fc(String),
    AcLf(AdjacencyConfig),
    Cc(CycleConfig),
}

impl fmt::Display for DescriptorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescriptorKey::NHeavy => write!(f, "n"),
            DescriptorKey::Rank => write!(f, "rank"),
            DescriptorKey::NInterior => write!(f, "n_int"),
            DescriptorKey::AvgMass => write!(f, "ms_avg"),
            DescriptorKey::Dg(d) => write!(f, "dg{d}"),
            DescriptorKey::DgInt(d) => write!(f, "dg_int{d}"),
            DescriptorKey::BdInt(m) => write!(f, "bd_int{m}"),
            DescriptorKey::NaInt(e) => write!(f, "na_int:{e}"),
            DescriptorKey::NaEx(e) => write!(f, "na_ex:{e}"),
            DescriptorKey::Ec(ec) => write!(f, "ec:{ec}"),
            DescriptorKey::Fc(c) => write!(f, "fc:{c}"),
            DescriptorKey::AcLf(ac) => write!(f, "ac_lf:{ac}"),
            DescriptorKey::Cc(xi) => write!(f, "cc:{xi}"),
        }
    }
}

impl DescriptorKey {
    pub fn parse(name: &str) -> Result<DescriptorKey> {
        let bad = || Error::Dataset(format!("unknown descriptor name {name:?}"));
        Ok(match name {
            "n" => DescriptorKey::NHeavy,
            "rank" => DescriptorKey::Rank,
            "n_int" => DescriptorKey::NInterior,
            "ms_avg" => DescriptorKey::AvgMass,
            _ => {
                if let Some(rest) = name.strip_prefix("dg_int") {
                    DescriptorKey::DgInt(rest.parse().map_err(|_| bad())?)
                } else if let Some(rest) = name.strip_prefix("dg") {
                    DescriptorKey::Dg(rest.parse().map_err(|_| bad())?)
                } else if let Some(rest) = name.strip_prefix("bd_int") {
                    DescriptorKey::BdInt(rest.parse().map_err(|_| bad())?)
                } else if let Some(rest) = name.strip_prefix("na_int:") {
                    DescriptorKey::NaInt(Element::parse_token(rest)?)
                } else if let Some(rest) = name.strip_prefix("na_ex:") {
                    DescriptorKey::NaEx(Element::parse_token(rest)?)
                } else if let Some(rest) = name.strip_prefix("ec:") {
                    DescriptorKey::Ec(EdgeConfig::parse(rest)?)
                } else if let Some(rest) = name.strip_prefix("fc:") {
                    DescriptorKey::Fc(rest.to_string())
                } else if let Some(rest) = name.strip_prefix("ac_lf:") {
                    DescriptorKey::AcLf(AdjacencyConfig::parse(rest)?)
                } else if let Some(rest) = name.strip_prefix("cc:") {
                    DescriptorKey::Cc(CycleConfig::parse(rest)?)
                } else {
                    return Err(bad());
                }
            }
        })
    }
}

/// Builds the descriptor dictionary over a profiled dataset: every
/// configuration occurring in any kept molecule appears exactly once, lists
/// sorted under the fixed total orders.
pub fn build_dictionary(
    profiles: &[MoleculeProfile],
    p: &FeaturizeParams,
) -> Result<DescriptorDictionary> {
    if profiles.is_empty() {
        return Err(Error::Dataset(
            "no feasible molecules left after filtering".into(),
        ));
    }
    let mut lambda_int = std::collections::BTreeSet::new();
    let mut lambda_ex = std::collections::BTreeSet::new();
    let mut gamma_int_ec = std::collections::BTreeSet::new();
    let mut fringe_codes = std::collections::BTreeSet::new();
    let mut gamma_lf_ac = std::collections::BTreeSet::new();
    let mut xi_set = std::collections::BTreeSet::new();
    for pr in profiles {
        lambda_int.extend(pr.survey.na_int.keys().copied());
        lambda_ex.extend(pr.survey.na_ex.keys().copied());
        gamma_int_ec.extend(pr.survey.ec_int.keys().copied());
        fringe_codes.extend(pr.survey.fc.keys().cloned());
        gamma_lf_ac.extend(pr.survey.ac_lf.keys().copied());
        if p.with_cc {
            xi_set.extend(pr.cc.keys().cloned());
        }
    }
    Ok(DescriptorDictionary {
        format: DICTIONARY_FORMAT.to_string(),
        rho: p.rho,
        c_min: p.c_min,
        c_max: p.c_max,
        lambda_int: lambda_int.into_iter().collect(),
        lambda_ex: lambda_ex.into_iter().collect(),
        gamma_int_ec: gamma_int_ec.into_iter().collect(),
        fringe_codes: fringe_codes.into_iter().collect(),
        gamma_lf_ac: gamma_lf_ac.into_iter().collect(),
        xi_set: xi_set.into_iter().collect(),
    })
}

/// The assembled feature matrix: one row per kept molecule, K_2L + K_CC
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub ids: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Exact average-mass rational per row (the `ms_avg` column).
    pub avg_mass: Vec<(u64, u64)>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
    pub fn n_cols(&self) -> usize {
        self.header.len()
    }
}

/// Featurizes all profiles under a dictionary: f = (f_2L, f_CC).
pub fn featurize_all(
    profiles: &[MoleculeProfile],
    dict: &DescriptorDictionary,
) -> Result<FeatureMatrix> {
    let mut seen = std::collections::BTreeSet::new();
    let header = dict.header();
    let mut ids = Vec::with_capacity(profiles.len());
    let mut rows = Vec::with_capacity(profiles.len());
    let mut avg_mass = Vec::with_capacity(profiles.len());
    for pr in profiles {
        if !seen.insert(pr.id.clone()) {
            return Err(Error::Dataset(format!("duplicate molecule id {:?}", pr.id)));
        }
        let d2l = twolayer::descriptors_2l(&pr.survey, dict)?;
        let cc = cycleconf::f_cc(&pr.cc, dict)?;
        let mut row = d2l.values;
        row.extend_from_slice(&cc);
        debug_assert_eq!(row.len(), dict.k_total());
        ids.push(pr.id.clone());
        rows.push(row);
        avg_mass.push((d2l.avg_mass_num, d2l.avg_mass_den));
    }
    Ok(FeatureMatrix {
        ids,
        header,
        rows,
        avg_mass,
    })
}

/// Formats num/den as a decimal with exactly six fractional digits, rounding
/// half up. Integer arithmetic only, so output is platform-stable.
pub fn format_fixed6(num: u64, den: u64) -> String {
    assert!(den > 0);
    let scaled = u128::from(num) * 1_000_000;
    let den = u128::from(den);
    let q = (2 * scaled + den) / (2 * den);
    format!("{}.{:06}", q / 1_000_000, q % 1_000_000)
}

fn parse_fixed6(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::Dataset(format!("bad ms_avg cell {s:?}"));
    let (int, frac) = s.split_once('.').ok_or_else(bad)?;
    if frac.len() != 6 {
        return Err(bad());
    }
    let i: u64 = int.parse().map_err(|_| bad())?;
    let f: u64 = frac.parse().map_err(|_| bad())?;
    Ok((i * 1_000_000 + f, 1_000_000))
}

/// Writes the feature CSV: header `id,<descriptor names...>`, integer cells
/// without decimal point, `ms_avg` with six fractional digits.
pub fn write_feature_csv(m: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(m.header.iter().cloned());
    w.write_record(&header)?;
    let ms_col = m.header.iter().position(|h| h == "ms_avg");
    for (i, row) in m.rows.iter().enumerate() {
        let mut rec = vec![m.ids[i].clone()];
        for (j, v) in row.iter().enumerate() {
            if Some(j) == ms_col {
                let (num, den) = m.avg_mass[i];
                rec.push(format_fixed6(num, den));
            } else {
                rec.push(format!("{v}"));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a feature CSV written by [`write_feature_csv`].
pub fn read_feature_csv(path: &Path) -> Result<FeatureMatrix> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
    let ms_col = header.iter().position(|h| h == "ms_avg");
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut avg_mass = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut it = rec.iter();
        let id = it
            .next()
            .ok_or_else(|| Error::Dataset("empty feature row".into()))?;
        let mut row = Vec::with_capacity(header.len());
        let mut ms = (0u64, 1u64);
        for (j, cell) in it.enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Dataset(format!("non-numeric feature cell {cell:?}")))?;
            if Some(j) == ms_col {
                ms = parse_fixed6(cell)?;
            }
            row.push(v);
        }
        if row.len() != header.len() {
            return Err(Error::Dataset(format!(
                "feature row for {id:?} has {} cells, expected {}",
                row.len(),
                header.len()
            )));
        }
        ids.push(id.to_string());
        rows.push(row);
        avg_mass.push(ms);
    }
    Ok(FeatureMatrix {
        ids,
        header,
        rows,
        avg_mass,
    })
}

/// Writes the dictionary as pretty JSON (deterministic bytes).
pub fn write_dictionary_json(dict: &DescriptorDictionary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(dict)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_dictionary_json(path: &Path) -> Result<DescriptorDictionary> {
    let text = fs::read_to_string(path)?;
    let dict: DescriptorDictionary = serde_json::from_str(&text)?;
    if dict.format != DICTIONARY_FORMAT {
        return Err(Error::Dataset(format!(
            "unsupported dictionary format {:?} (expected {DICTIONARY_FORMAT:?})",
            dict.format
        )));
    }
    dict.check_sorted()?;
    Ok(dict)
}

/// Writes the per-molecule skip report CSV (`id,reason`).
pub fn write_skip_report(skips: &[SkipRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["id", "reason"])?;
    for s in skips {
        w.write_record([s.id.as_str(), s.reason.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a values CSV. The header names the id column and the property; each
/// row is `id,value`.
pub fn read_values_csv(path: &Path) -> Result<(String, BTreeMap<String, f64>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::Dataset(
            "values CSV needs an id column and a value column".into(),
        ));
    }
    let property = headers.get(1).unwrap_or("value").to_string();
    let mut values = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or("").to_string();
        let raw = rec.get(1).unwrap_or("");
        let v: f64 = raw.trim().parse().map_err(|_| {
            Error::Dataset(format!("non-numeric property value {raw:?} for id {id:?}"))
        })?;
        if values.insert(id.clone(), v).is_some() {
            return Err(Error::Dataset(format!("duplicate value row for id {id:?}")));
        }
    }
    Ok((property, values))
}

/// Reads an SDF plus a values CSV into a dataset. Records that fail to parse
/// become skip entries; a value row without a matching record, or a record
/// without a value, is an error.
pub fn read_dataset(sdf_path: &Path, values_path: &Path) -> Result<Dataset> {
    let (property_name, values) = read_values_csv(values_path)?;
    let text = fs::read_to_string(sdf_path)?;
    let mut molecules = Vec::new();
    let mut skips = Vec::new();
    let mut seen_ids = std::collections::BTreeSet::new();
    for (i, block) in crate::chemgraph::sdf_records(&text).into_iter().enumerate() {
        let fallback_id = format!("record-{}", i + 1);
        match crate::chemgraph::parse_sdf_record(block) {
            Ok(g) => {
                let id = if g.name().is_empty() {
                    fallback_id
                } else {
                    g.name().to_string()
                };
                if !seen_ids.insert(id.clone()) {
                    return Err(Error::Dataset(format!(
                        "duplicate molecule id {id:?} in SDF"
                    )));
                }
                if !values.contains_key(&id) {
                    return Err(Error::Dataset(format!(
                        "missing property value for molecule {id:?}"
                    )));
                }
                molecules.push((id, g));
            }
            Err(e) => {
                let id = block
                    .lines()
                    .next()
                    .map(str::trim)
                    .filter(|s| !s.is_empty());
                skips.push(SkipRecord {
                    id: id.map(str::to_string).unwrap_or(fallback_id),
                    reason: e.to_string(),
                });
            }
        }
    }
    for id in values.keys() {
        if !molecules.iter().any(|(mid, _)| mid == id) && !skips.iter().any(|s| &s.id == id) {
            return Err(Error::Dataset(format!(
                "value row for {id:?} has no SDF record"
            )));
        }
    }
    Ok(Dataset {
        molecules,
        values,
        property_name,
        skips,
    })
}
