use gs_transfer::diagnostics::{export_report, vtu_data, DiagnosticsReport, MeshStats, RegionMask};
use gs_transfer::fixtures;
use gs_transfer::transfer::{run_transfer, PathKind, TransferConfig, FIELD_NAMES};

fn report() -> DiagnosticsReport {
    let m = fixtures::structured(8);
    let eq = fixtures::linear_gs(&m).unwrap();
    let masks: Vec<(RegionMask, Vec<bool>)> = [RegionMask::All, RegionMask::Plasma, RegionMask::band()]
        .into_iter()
        .map(|k| (k, k.select(&m, Some(&eq)).unwrap()))
        .collect();
    let mut r = DiagnosticsReport::default();
    r.meshes.push(("s8".into(), MeshStats::of(&m, 0)));
    for p in [PathKind::A, PathKind::B, PathKind::C] {
        let res = run_transfer(&TransferConfig::new(p), &eq, &m).unwrap();
        r.add_result(&res, &masks, "s8").unwrap();
    }
    r
}

#[test]
fn one_row_per_path_field_and_mask() {
    let r = report();
    assert_eq!(r.rows.len(), 3 * 7 * 3);
    for f in FIELD_NAMES {
        for mask in ["all", "plasma", "band:0,0.05"] {
            for p in ["A", "B", "C"] {
                assert!(r.norm(f, mask, p, "multiply", "s8").is_some(), "{f} {mask} {p}");
            }
        }
    }
    assert_eq!(r.path_ratios("A", "B").len(), 21);
}

#[test]
fn csv_round_trip_is_lossless() {
    let r = report();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("n.csv");
    export_report(&r, &p).unwrap();
    let mut rd = csv::Reader::from_path(&p).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["field", "mask", "norm", "path", "rweight", "mesh_id"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), r.rows.len());
    for (rec, row) in rows.iter().zip(&r.rows) {
        assert_eq!(&rec[0], row.field);
        assert_eq!(&rec[1], row.mask);
        assert_eq!(rec[2].parse::<f64>().unwrap(), row.norm);
    }
    // Stable output for identical input.
    assert_eq!(r.to_csv().unwrap(), report().to_csv().unwrap());
}

#[test]
fn mask_specs_round_trip() {
    for s in ["all", "plasma", "tag:2", "band:0,0.05", "band:0.1,0.3"] {
        let m: RegionMask = s.parse().unwrap();
        assert_eq!(m.to_string(), s);
    }
    assert_eq!("band".parse::<RegionMask>().unwrap(), RegionMask::band());
    for bad in ["", "tag:x", "band:1", "band:0.5,0.1", "core"] {
        assert!(bad.parse::<RegionMask>().is_err(), "{bad:?}");
    }
}

#[test]
fn vtu_export_carries_every_field() {
    let m = fixtures::structured(4);
    let eq = fixtures::linear_gs(&m).unwrap();
    let res = run_transfer(&TransferConfig::new(PathKind::B), &eq, &m).unwrap();
    let data = vtu_data(&res, &[("psi", &eq.psi)]);
    let text = gs_transfer::mesh::vtu_string(&m, &data).unwrap();
    for name in FIELD_NAMES.iter().chain(&["psi"]) {
        assert!(text.contains(&format!("Name=\"{name}\"")), "{name}");
    }
}
