use freqsev::data::ColumnKind;
use freqsev::{
    generate, load_csv, write_csv, ClaimRecord, ClaimsDataset, ColumnSpec, Error, FeatureValue, SchemaColumn,
    SchemaConfig, SchemaKind, SynthConfig,
};
use proptest::prelude::*;

const LEVELS: [&str; 4] = ["diesel", "gasoline", "hybrid", "N A"];

/// Predictor values with categorical levels spelled out.
fn decoded(ds: &ClaimsDataset<f64>) -> Vec<(Vec<String>, u64, f64)> {
    ds.rows()
        .iter()
        .map(|r| {
            let p = r
                .predictors
                .iter()
                .zip(ds.columns())
                .map(|(v, c)| match (v, &c.kind) {
                    (FeatureValue::Numeric(x), _) => format!("{x:e}"),
                    (FeatureValue::Level(l), ColumnKind::Categorical { levels }) => levels[*l as usize].clone(),
                    _ => unreachable!(),
                })
                .collect();
            (p, r.frequency, r.severity)
        })
        .collect()
}

fn table() -> impl Strategy<Value = ClaimsDataset<f64>> {
    prop::collection::vec((-1e9f64..1e9, 0usize..4, 0u64..5, 1e-3f64..1e6), 1..40).prop_map(|rows| {
        let columns = vec![
            ColumnSpec::numeric("power"),
            // levels deliberately not in first-appearance order
            ColumnSpec::categorical("fuel", LEVELS.iter().rev().map(|s| s.to_string()).collect()),
        ];
        let rows = rows
            .into_iter()
            .map(|(x, l, f, s)| ClaimRecord {
                predictors: vec![FeatureValue::Numeric(x), FeatureValue::Level(l as u32)],
                frequency: f,
                severity: if f == 0 { 0.0 } else { s },
            })
            .collect();
        ClaimsDataset::new(columns, rows).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn severity_schema_round_trips_exactly(ds in table()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("claims.csv");
        let schema = SchemaConfig::for_dataset(&ds).unwrap();
        write_csv(&ds, &path, &schema).unwrap();
        let back: ClaimsDataset<f64> = load_csv(&path, &schema).unwrap();
        prop_assert_eq!(decoded(&back), decoded(&ds));
    }

    #[test]
    fn total_amount_schema_round_trips(ds in table(), semicolon in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("claims.csv");
        let mut schema = SchemaConfig::new(vec![
            SchemaColumn::new("id", SchemaKind::Ignore),
            SchemaColumn::new("fuel", SchemaKind::Categorical),
            SchemaColumn::new("nclaims", SchemaKind::Frequency),
            SchemaColumn::new("power", SchemaKind::Numeric),
            SchemaColumn::new("amount", SchemaKind::TotalAmount),
        ]).unwrap();
        if semicolon {
            schema.delimiter = ';';
            schema.decimal = ',';
        }
        write_csv(&ds, &path, &schema).unwrap();
        let back: ClaimsDataset<f64> = load_csv(&path, &schema).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        for (a, b) in back.rows().iter().zip(ds.rows()) {
            prop_assert_eq!(a.frequency, b.frequency);
            prop_assert!((a.severity - b.severity).abs() <= 1e-12 * b.severity.max(1.0));
        }
        // schema order puts fuel first
        let a = decoded(&back);
        let b = decoded(&ds);
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.0[0], &y.0[1]);
            prop_assert_eq!(&x.0[1], &y.0[0]);
        }
    }
}

#[test]
fn synthetic_data_round_trips() {
    let ds = generate(&SynthConfig::new(500, 12)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synthetic.csv");
    let schema = SchemaConfig::for_dataset(&ds).unwrap();
    write_csv(&ds, &path, &schema).unwrap();
    let back: ClaimsDataset<f64> = load_csv(&path, &schema).unwrap();
    assert_eq!(back, ds);
    let again = SchemaConfig::from_toml_str(&schema.to_toml_string().unwrap()).unwrap();
    assert_eq!(again, schema);
}

#[test]
fn total_amount_divides_by_count() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    std::fs::write(&path, "Fuel,NClaims,Amount\ndiesel,2,232.60\ngasoline,0,0\n").unwrap();
    let schema = SchemaConfig::new(vec![
        SchemaColumn::new("Fuel", SchemaKind::Categorical),
        SchemaColumn::new("NClaims", SchemaKind::Frequency),
        SchemaColumn::new("Amount", SchemaKind::TotalAmount),
    ])
    .unwrap();
    let ds: ClaimsDataset<f64> = load_csv(&path, &schema).unwrap();
    assert!((ds.rows()[0].severity - 116.30).abs() < 1e-12);
    assert_eq!(ds.rows()[1].severity, 0.0);
}

#[test]
fn parse_errors_name_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let schema = SchemaConfig::new(vec![
        SchemaColumn::new("x", SchemaKind::Numeric),
        SchemaColumn::new("n", SchemaKind::Frequency),
        SchemaColumn::new("amount", SchemaKind::TotalAmount),
    ])
    .unwrap();
    for (body, row, column) in [
        ("1,1,5\nabc,1,5\n", 2, "x"),
        ("1,1.5,5\n", 1, "n"),
        ("1,0,5\n", 1, "amount"),
        ("1,1,NA\n", 1, "amount"),
        ("1,-1,0\n", 1, "n"),
    ] {
        std::fs::write(&path, format!("x,n,amount\n{body}")).unwrap();
        match load_csv::<f64>(&path, &schema) {
            Err(Error::Parse { row: r, column: c, .. }) => assert_eq!((r, c.as_str()), (row, column), "{body}"),
            other => panic!("expected a parse error for {body:?}, got {other:?}"),
        }
    }
}
