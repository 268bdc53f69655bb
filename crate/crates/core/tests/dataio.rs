use clusterduel::dataio::{
    fit_schema, generate_synthetic, read_csv_from, stream, write_csv_to, Encoder, SegmentEncoding,
    SyntheticEnvSpec,
};
use clusterduel::experiment::Dataset;
use clusterduel::{Error, ErrorKind};
use proptest::prelude::*;

const LOG: &str = "\
user_id,timestamp,chosen_item,device,age
u1,30,b,mobile,31.5
u2,10,a,desktop,22
u3,20,c,mobile,40
u1,40,a,tablet,28
";

fn spec(encoding: SegmentEncoding) -> SyntheticEnvSpec {
    SyntheticEnvSpec {
        n_items: 6,
        categorical_sizes: vec![3, 4],
        n_continuous: 2,
        n_latent_segments: 3,
        segment_preference_matrix: None,
        drift_period: Some(50),
        seed: 21,
        feature_noise: 0.1,
        continuous_noise: 0.1,
        preference_concentration: 2.0,
        segment_encoding: encoding,
    }
}

#[test]
fn csv_round_trip_and_encoding() {
    let rows = read_csv_from(LOG.as_bytes()).unwrap();
    let mut buf = Vec::new();
    write_csv_to(&mut buf, &rows).unwrap();
    assert_eq!(read_csv_from(buf.as_slice()).unwrap(), rows);

    let schema = fit_schema(&rows).unwrap();
    // device one-hot (3) + age scaled (1)
    assert_eq!(schema.context_dim, 4);
    assert_eq!(schema.n_items(), 3);
    let encoder = Encoder::new(schema);
    let trials = encoder.encode_all(&rows).unwrap();
    for t in &trials {
        assert_eq!(t.context.len(), 4);
        assert_eq!(t.context[..3].iter().filter(|v| **v == 1.0).count(), 1);
        assert!((0.0..=1.0).contains(&t.context[3]));
    }
    let ordered: Vec<i64> = stream(trials.clone(), None).map(|t| t.timestamp).collect();
    assert_eq!(ordered, vec![10, 20, 30, 40]);
    let shuffled: Vec<usize> = stream(trials, Some(5)).map(|t| t.index).collect();
    assert_eq!(shuffled, vec![0, 1, 2, 3]);
}

#[test]
fn malformed_logs_are_data_errors() {
    let no_choice = "user_id,timestamp,device\nu1,1,mobile\n";
    let err = read_csv_from(no_choice.as_bytes()).unwrap_err();
    assert!(matches!(&err, Error::MissingColumn(c) if c == "chosen_item"));
    assert_eq!(err.kind(), ErrorKind::Data);

    let bad_ts = "user_id,timestamp,chosen_item\nu1,noon,a\n";
    assert!(matches!(
        read_csv_from(bad_ts.as_bytes()),
        Err(Error::BadValue { .. })
    ));

    let empty = "user_id,timestamp,chosen_item\n";
    let err = Dataset::from_csv_bytes(empty.as_bytes(), None, "mem").unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Data);
}

#[test]
fn dataset_fingerprint_tracks_bytes() {
    let a = Dataset::from_csv_bytes(LOG.as_bytes(), None, "a").unwrap();
    let b = Dataset::from_csv_bytes(LOG.as_bytes(), None, "b").unwrap();
    assert_eq!(a.fingerprint, b.fingerprint);
    let c = Dataset::from_csv_bytes(LOG.replace("u3", "u4").as_bytes(), None, "c").unwrap();
    assert_ne!(a.fingerprint, c.fingerprint);
}

#[test]
fn synthetic_generation_is_seeded() {
    for encoding in [SegmentEncoding::Home, SegmentEncoding::Modular] {
        let a = generate_synthetic(&spec(encoding), 300).unwrap();
        let b = generate_synthetic(&spec(encoding), 300).unwrap();
        assert_eq!(a, b);
        let mut other = spec(encoding);
        other.seed = 22;
        assert_ne!(a, generate_synthetic(&other, 300).unwrap());
        let d = Dataset::from_synthetic(&spec(encoding), 300, None).unwrap();
        assert_eq!(d.trials.len(), 300);
        assert_eq!(d.context_dim, 3 + 4 + 2);
    }
}

#[test]
fn modular_encoding_carries_the_segment_in_the_residue() {
    let mut s = spec(SegmentEncoding::Modular);
    s.feature_noise = 0.0;
    let trials = clusterduel::dataio::SyntheticGenerator::new(s)
        .unwrap()
        .generate(2000);
    for t in &trials {
        let sum: usize = (0..2)
            .map(|f| {
                let v = &t.raw.features[&format!("cat{f}")];
                v.rsplit('v').next().unwrap().parse::<usize>().unwrap()
            })
            .sum();
        assert_eq!(sum % 3, t.segment);
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let mut s = spec(SegmentEncoding::Home);
    s.segment_preference_matrix = Some(vec![vec![0.5, 0.6, 0.0, 0.0, 0.0, 0.0]; 3]);
    assert_eq!(s.validate().unwrap_err().kind(), ErrorKind::Config);
    let mut s = spec(SegmentEncoding::Modular);
    s.categorical_sizes = vec![3, 2];
    assert!(s.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn drift_preserves_the_marginal_item_set(seed in any::<u64>(), n in 50usize..400) {
        let mut s = spec(SegmentEncoding::Home);
        s.seed = seed;
        let trials = generate_synthetic(&s, n).unwrap();
        prop_assert_eq!(trials.len(), n);
        prop_assert!(trials.iter().all(|r| r.chosen_item.starts_with("item")));
        let ts: Vec<i64> = trials.iter().map(|r| r.timestamp).collect();
        prop_assert!(ts.windows(2).all(|w| w[0] <= w[1]));
    }
}
