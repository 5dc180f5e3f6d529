//! Dataset ingestion and file-format round trips.

mod common;

use std::path::PathBuf;

use moldesc::features::{self, FeaturizeParams};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

#[test]
fn feature_csv_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let ds = features::read_dataset(
        &data_dir().join("demo.sdf"),
        &data_dir().join("demo_values.csv"),
    )
    .unwrap();
    let params = FeaturizeParams::default();
    let (profiles, _) = features::profile_dataset(&ds, &params);
    let dict = features::build_dictionary(&profiles, &params).unwrap();
    let matrix = features::featurize_all(&profiles, &dict).unwrap();
    let p1 = dir.path().join("one.csv");
    let p2 = dir.path().join("two.csv");
    features::write_feature_csv(&matrix, &p1).unwrap();
    let back = features::read_feature_csv(&p1).unwrap();
    assert_eq!(back.ids, matrix.ids);
    assert_eq!(back.header, matrix.header);
    features::write_feature_csv(&back, &p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn dictionary_json_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let ds = features::read_dataset(
        &data_dir().join("demo.sdf"),
        &data_dir().join("demo_values.csv"),
    )
    .unwrap();
    let params = FeaturizeParams::default();
    let (profiles, _) = features::profile_dataset(&ds, &params);
    let dict = features::build_dictionary(&profiles, &params).unwrap();
    let p1 = dir.path().join("one.json");
    let p2 = dir.path().join("two.json");
    features::write_dictionary_json(&dict, &p1).unwrap();
    let back = features::read_dictionary_json(&p1).unwrap();
    assert_eq!(back, dict);
    features::write_dictionary_json(&back, &p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
}

#[test]
fn value_rows_must_match_sdf_records() {
    let dir = tempfile::tempdir().unwrap();
    let sdf = std::fs::read_to_string(data_dir().join("demo.sdf")).unwrap();
    let sdf_path = dir.path().join("demo.sdf");
    std::fs::write(&sdf_path, &sdf).unwrap();

    // Value row naming a molecule that is not in the SDF.
    let mut values = std::fs::read_to_string(data_dir().join("demo_values.csv")).unwrap();
    values.push_str("phantom,1.0\n");
    let values_path = dir.path().join("extra.csv");
    std::fs::write(&values_path, &values).unwrap();
    let err = features::read_dataset(&sdf_path, &values_path).unwrap_err();
    assert!(err.to_string().contains("phantom"), "{err}");

    // Record without a value row.
    let values = "id,bp\ncatechol,245.0\n";
    let values_path = dir.path().join("short.csv");
    std::fs::write(&values_path, values).unwrap();
    let err = features::read_dataset(&sdf_path, &values_path).unwrap_err();
    assert!(err.to_string().contains("missing property value"), "{err}");
}

#[test]
fn bundled_phenols_have_the_expected_shape() {
    let ds = features::read_dataset(
        &data_dir().join("demo.sdf"),
        &data_dir().join("demo_values.csv"),
    )
    .unwrap();
    let get = |name: &str| &ds.molecules.iter().find(|(id, _)| id == name).unwrap().1;
    // Resorcinol: 8 heavy atoms (6 C, 2 O) plus 6 hydrogens.
    let res = get("resorcinol");
    assert_eq!(res.n_heavy(), 8);
    assert_eq!(res.n_atoms(), 14);
    let carbons = res.atoms().iter().filter(|a| a.symbol() == "C").count();
    let oxygens = res.atoms().iter().filter(|a| a.symbol() == "O").count();
    assert_eq!((carbons, oxygens), (6, 2));
    // Catechol suppresses to 8 kept vertices with 8 edges among them.
    let cat = get("catechol");
    let s = moldesc::chemgraph::suppress_hydrogens(cat).unwrap();
    assert_eq!(s.n(), 8);
    assert_eq!(s.edges().len(), 8);
}

#[test]
fn header_names_parse_back_to_their_keys() {
    use moldesc::features::DescriptorKey;
    let ds = features::read_dataset(
        &data_dir().join("demo.sdf"),
        &data_dir().join("demo_values.csv"),
    )
    .unwrap();
    let params = FeaturizeParams::default();
    let (profiles, _) = features::profile_dataset(&ds, &params);
    let dict = features::build_dictionary(&profiles, &params).unwrap();
    for (key, name) in dict.keys().iter().zip(dict.header()) {
        let parsed = DescriptorKey::parse(&name).unwrap();
        assert_eq!(&parsed, key, "{name}");
        assert_eq!(parsed.to_string(), name);
    }
}

#[test]
fn multivalent_sulfur_flows_through_the_pipeline() {
    // A sulfone-like ring: S(6) carrying two double-bonded oxygens inside a
    // six-ring of carbons.
    let g = moldesc::chemgraph::parse_graph_json(
        r#"{"name":"sulfone","atoms":[
            {"element":"S","variant":6},{"element":"C"},{"element":"C"},
            {"element":"C"},{"element":"C"},{"element":"C"},
            {"element":"O"},{"element":"O"}],
            "bonds":[[0,1,1],[1,2,1],[2,3,1],[3,4,1],[4,5,1],[5,0,1],
                     [0,6,2],[0,7,2]]}"#,
    )
    .unwrap();
    let params = FeaturizeParams::default();
    let profile = features::profile_molecule("sulfone", &g, &params).unwrap();
    let dict = features::build_dictionary(std::slice::from_ref(&profile), &params).unwrap();
    // The S(6) ring atom is interior, its descriptor name keeps the variant.
    assert!(dict.header().iter().any(|h| h == "na_int:S6"), "{:?}", dict.header());
    let matrix = features::featurize_all(std::slice::from_ref(&profile), &dict).unwrap();
    assert_eq!(matrix.rows[0].len(), dict.k_total());
    // SDF round trip re-resolves the variant from the bond order sum.
    let text = moldesc::chemgraph::write_sdf_record(&g);
    let back = moldesc::chemgraph::parse_sdf(&text).unwrap();
    assert_eq!(back[0].element(0).valence(), 6);
}

#[test]
fn unparseable_records_become_skips() {
    let dir = tempfile::tempdir().unwrap();
    // A disconnected two-fragment record plus one good molecule.
    let sdf = "\
broken
  x

  2  0  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
M  END
$$$$
pentane
  x

  5  4  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0  0  0  0
  2  3  1  0  0  0  0
  3  4  1  0  0  0  0
  4  5  1  0  0  0  0
M  END
$$$$
";
    let sdf_path = dir.path().join("mixed.sdf");
    std::fs::write(&sdf_path, sdf).unwrap();
    let values_path = dir.path().join("values.csv");
    std::fs::write(&values_path, "id,bp\npentane,36.1\n").unwrap();
    let ds = features::read_dataset(&sdf_path, &values_path).unwrap();
    assert_eq!(ds.molecules.len(), 1);
    assert_eq!(ds.skips.len(), 1);
    assert_eq!(ds.skips[0].id, "broken");
    assert!(
        ds.skips[0].reason.contains("disconnected"),
        "{}",
        ds.skips[0].reason
    );

    // The skip flows through to the skip report.
    let params = FeaturizeParams::default();
    let (profiles, skips) = features::profile_dataset(&ds, &params);
    assert_eq!(profiles.len(), 1);
    assert_eq!(skips.len(), 1);
    let report_path = dir.path().join("skips.csv");
    features::write_skip_report(&skips, &report_path).unwrap();
    let report = std::fs::read_to_string(&report_path).unwrap();
    assert!(report.starts_with("id,reason\n"));
    assert!(report.contains("broken"));
}
