use proptest::prelude::*;
use sensegen::data::{
    load_column, load_windowed_text, normalize, read_metadata, synthetic_dataset, window_series,
    write_column, write_metadata, NormRange, NormRecord, SyntheticKind, TraceMetadata,
};
use sensegen::Error;

#[test]
fn windowed_text_two_by_four() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("w.txt");
    std::fs::write(&p, "1 2 3 4\n  5e-1 -6 7.25   8\n").unwrap();
    let w = load_windowed_text(&p, 4).unwrap();
    assert_eq!(w, vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.5, -6.0, 7.25, 8.0]]);
}

#[test]
fn har_width_rows() {
    let row = |k: usize| (0..k).map(|i| format!("{:e}", i as f64 * 1e-3)).collect::<Vec<_>>().join("  ");
    let good = format!("{}\n{}\n", row(128), row(128));
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("body_acc_x_train.txt");
    std::fs::write(&p, &good).unwrap();
    let w = load_windowed_text(&p, 128).unwrap();
    assert_eq!(w.len() * 128, good.split_whitespace().count());

    std::fs::write(&p, format!("{}\n{}\n", row(128), row(127))).unwrap();
    match load_windowed_text(&p, 128) {
        Err(Error::Parse { line: 2, message }) => assert!(message.contains("127")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn bad_token_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("w.txt");
    std::fs::write(&p, "1 2\n3 abc\n").unwrap();
    let e = load_windowed_text(&p, 2).unwrap_err();
    assert!(matches!(&e, Error::Parse { line: 2, .. }));
    assert!(e.to_string().contains("abc"));
}

#[test]
fn column_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.txt");
    std::fs::write(&p, "0\n0.5\n1").unwrap();
    assert_eq!(load_column(&p).unwrap(), vec![0.0, 0.5, 1.0]);

    std::fs::write(&p, "").unwrap();
    assert!(matches!(load_column(&p), Err(Error::EmptyInput(_))));

    let long: Vec<f64> = (0..7000).map(|i| (i as f64 * 0.01).sin()).collect();
    write_column(&p, &long).unwrap();
    assert_eq!(load_column(&p).unwrap(), long);
}

#[test]
fn metadata_sidecar_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.json");
    let m = TraceMetadata {
        channel: "body_acc_x".into(),
        sample_rate_hz: 50.0,
        length: 400,
        seed: 7,
        normalization: NormRecord::single("body_acc_x", NormRange::new(-0.731, 1.0 / 3.0).unwrap()),
    };
    write_metadata(&p, &m).unwrap();
    assert_eq!(read_metadata(&p).unwrap(), m);
}

#[test]
fn normalize_examples() {
    let (n, r) = normalize::<f64>(&[0.0, 5.0, 10.0]).unwrap();
    assert_eq!(n, vec![0.0, 0.5, 1.0]);
    assert_eq!((r.min, r.max), (0.0, 10.0));
    assert!(matches!(normalize::<f64>(&[2.0; 4]), Err(Error::DegenerateRange { .. })));
}

#[test]
fn disjoint_tiling_reconstructs_a_prefix() {
    let s: Vec<f64> = (0..23).map(f64::from).collect();
    let w = window_series(&s, 5, 5).unwrap();
    assert_eq!(w.len(), 4);
    let flat: Vec<f64> = w.concat();
    assert_eq!(&flat[..], &s[..20]);
    assert_eq!(window_series(&s, 400.min(s.len()), 1).unwrap().len(), 1);
}

#[test]
fn synthetic_kinds() {
    assert!(matches!(SyntheticKind::named("chirp"), Err(Error::Config(_))));
    let clean = SyntheticKind::Sine {
        amplitude: 2.0,
        frequency: 0.1,
        noise: 0.0,
    };
    let s = synthetic_dataset(clean, 50, 1).unwrap();
    for (t, v) in s.iter().enumerate() {
        assert!((v - 2.0 * (2.0 * std::f64::consts::PI * 0.1 * t as f64).sin()).abs() < 1e-12);
    }
    let white = synthetic_dataset(SyntheticKind::Ar1 { phi: 0.0, noise: 1.0 }, 10_000, 3).unwrap();
    let m = white.iter().sum::<f64>() / 1e4;
    let num: f64 = white.windows(2).map(|p| (p[0] - m) * (p[1] - m)).sum();
    let den: f64 = white.iter().map(|x| (x - m).powi(2)).sum();
    assert!((num / den).abs() < 0.05);
    let b = synthetic_dataset(SyntheticKind::named("bimodal").unwrap(), 4000, 5).unwrap();
    let near = |c: f64| b.iter().filter(|x| (*x - c).abs() < 0.3).count();
    assert!(near(1.0) > 1800 && near(-1.0) > 1800);
    assert_eq!(b.iter().filter(|x| x.abs() < 0.5).count(), 0);
}

proptest! {
    #[test]
    fn loaders_keep_every_token(rows in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 6), 1..20)) {
        let text: String = rows
            .iter()
            .map(|r| r.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ") + "\n")
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.txt");
        std::fs::write(&p, &text).unwrap();
        let w = load_windowed_text(&p, 6).unwrap();
        prop_assert_eq!(w.iter().map(Vec::len).sum::<usize>(), text.split_whitespace().count());
        prop_assert_eq!(w, rows);
    }
}
