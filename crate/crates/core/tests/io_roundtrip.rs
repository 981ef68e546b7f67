mod common;

use kspec_core::io::{self, Table};
use kspec_core::{kernel_smooth, SmoothedDensity, SpectralDistribution, SpectralMeasure};
use proptest::prelude::*;

fn rewrite_table(bytes: &[u8]) -> Vec<u8> {
    let t = Table::read(bytes).unwrap();
    let mut out = Vec::new();
    t.write(&mut out).unwrap();
    out
}

#[test]
fn matrix_csv_roundtrip_is_byte_stable() {
    let m = common::normal_matrix(&mut common::rng(1), 4, 7);
    let mut first = Vec::new();
    io::write_matrix_csv(&mut first, &m, &["config: {\"a\":1}".to_owned()]).unwrap();
    let (comments, back) = io::read_matrix_csv_commented(&first[..]).unwrap();
    assert_eq!(back, m);
    let mut second = Vec::new();
    io::write_matrix_csv(&mut second, &back, &comments).unwrap();
    assert_eq!(first, second);
}

#[test]
fn kspc_roundtrip_and_sniffing() {
    let dir = tempfile::tempdir().unwrap();
    let m = common::normal_matrix(&mut common::rng(2), 3, 5);
    let bin = dir.path().join("x.kspc");
    let csv = dir.path().join("x.csv");
    io::write_matrix_file(&bin, &m, true, &[]).unwrap();
    io::write_matrix_file(&csv, &m, false, &[]).unwrap();
    assert_eq!(io::read_matrix_file(&bin).unwrap(), m);
    assert_eq!(io::read_matrix_file(&csv).unwrap(), m);
    let again = dir.path().join("y.kspc");
    io::write_matrix_file(&again, &io::read_matrix_file(&bin).unwrap(), true, &[]).unwrap();
    assert_eq!(std::fs::read(&bin).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn spectrum_formats_roundtrip() {
    let f = SpectralDistribution::new(vec![0.3, 0.1, 2.5, 0.1]).unwrap();
    let table = io::spectrum_table(&f, vec!["config: {}".into()]);
    let mut bytes = Vec::new();
    table.write(&mut bytes).unwrap();
    assert_eq!(rewrite_table(&bytes), bytes);
    let back = io::spectrum_from_table(&Table::read(&bytes[..]).unwrap()).unwrap();
    assert_eq!(back, f);
    let json = io::spectrum_to_json(&f).unwrap();
    assert_eq!(io::spectrum_from_json(&json).unwrap(), f);
    assert_eq!(io::spectrum_to_json(&io::spectrum_from_json(&json).unwrap()).unwrap(), json);
}

#[test]
fn density_formats_roundtrip() {
    let f = SpectralDistribution::new(vec![0.2, 0.7]).unwrap();
    let grid: Vec<f64> = (0..101).map(|k| k as f64 / 100.0).collect();
    let d = kernel_smooth(&f, 0.05, &grid).unwrap();

    let mut bytes = Vec::new();
    io::density_table(&d, vec!["config: {\"h\":0.05}".into()]).write(&mut bytes).unwrap();
    assert_eq!(rewrite_table(&bytes), bytes);
    let back = io::density_from_table(&Table::read(&bytes[..]).unwrap()).unwrap();
    assert_eq!(back, d);

    let json = io::density_to_json(&d).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(parsed.get("grid").is_some() && parsed.get("values").is_some());
    assert_eq!(parsed["bandwidth"], serde_json::json!(0.05));
    let back: SmoothedDensity = io::density_from_json(&json).unwrap();
    assert_eq!(back, d);
    assert_eq!(io::density_to_json(&back).unwrap(), json);
}

#[test]
fn measure_json_roundtrip() {
    let h = SpectralMeasure::new(vec![(0.5, 0.25), (1.5, 0.75)]).unwrap();
    let json = io::measure_to_json(&h).unwrap();
    assert_eq!(json, r#"{"atoms":[[0.5,0.25],[1.5,0.75]]}"#);
    assert_eq!(io::measure_from_json(&json).unwrap(), h);
    assert!(io::measure_from_json(r#"{"atoms":[[0.5,0.5]]}"#).is_err());
    assert!(io::measure_from_json(r#"{"atoms":[[0.5,1.0]],"extra":1}"#).is_err());
}

proptest! {
    #[test]
    fn floats_roundtrip_through_csv(values in prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..50)) {
        let mut t = Table::new(&["value"]);
        for &v in &values {
            t.push(vec![v]);
        }
        let mut bytes = Vec::new();
        t.write(&mut bytes).unwrap();
        let back = Table::read(&bytes[..]).unwrap();
        prop_assert_eq!(back.column("value").unwrap().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(rewrite_table(&bytes), bytes);
    }
}
