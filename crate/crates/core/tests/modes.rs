use flexplan::modes::*;

#[test]
fn default_table_shape() {
    let cat = ModeCatalog::default_table();
    assert_eq!(cat.len(), 7);
    let t16 = Transceiver::new(16.0, 2);
    assert_eq!(cat.bitrate(0, &t16), Some(50.0));
    assert_eq!(cat.bitrate(6, &Transceiver::new(64.0, 6)), Some(375.0));
    assert_eq!(cat.label(6), "64QAM-0.68");
    let two = ModeCatalog::two_mode_table();
    assert_eq!(two.len(), 2);
    assert_eq!(two.bitrate(0, &t16), Some(112.5));
    assert_eq!(two.bitrate(1, &t16), Some(125.0));
}

#[test]
fn feasible_modes_fastest_first() {
    let cat = ModeCatalog::default_table();
    let t = Transceiver::new(32.0, 4);
    assert!(cat.feasible_modes(5.0, &t).is_empty());
    assert_eq!(cat.feasible_modes(11.0, &t), vec![2, 1, 0]);
    assert_eq!(cat.best_mode(100.0, &t), Some(6));
    let rates: Vec<f64> = cat.feasible_modes(100.0, &t).iter().map(|&m| cat.bitrate(m, &t).unwrap()).collect();
    assert!(rates.windows(2).all(|w| w[0] > w[1]));
}

#[test]
fn penalty_raises_thresholds() {
    let cat = ModeCatalog::default_table().with_penalty(1.0);
    assert_eq!(cat.threshold_db(0), 6.5);
    assert!(cat.feasible_modes(6.0, &Transceiver::new(16.0, 2)).is_empty());
}

#[test]
fn csv_validation() {
    let ok = "mf,fec,threshold_db,16,32\nQPSK,0.6,5,50,\n16QAM,0.7,11,75,150\n";
    let cat = ModeCatalog::from_csv_str(ok).unwrap();
    assert_eq!(cat.bitrate(0, &Transceiver::new(32.0, 4)), None);

    let bad_header = "mode,fec,threshold_db,16\nQPSK,0.6,5,50\n";
    assert!(matches!(ModeCatalog::from_csv_str(bad_header), Err(ModeError::Header(_))));
    let off_step = "mf,fec,threshold_db,16\nQPSK,0.6,5,51\n";
    assert!(matches!(ModeCatalog::from_csv_str(off_step), Err(ModeError::Bitrate { .. })));
    let non_monotone = "mf,fec,threshold_db,16\nA,0.6,9,50\nB,0.7,8,75\n";
    assert!(matches!(ModeCatalog::from_csv_str(non_monotone), Err(ModeError::NonMonotone { baud: 16 })));
    let empty = "mf,fec,threshold_db,16\nA,0.6,9,\n";
    assert!(matches!(ModeCatalog::from_csv_str(empty), Err(ModeError::EmptyMode(1))));
    let junk = "mf,fec,threshold_db,16\nA,x,9,50\n";
    assert!(matches!(ModeCatalog::from_csv_str(junk), Err(ModeError::Value { .. })));
}

#[test]
fn transceiver_must_fit_its_slots() {
    assert!(Transceiver::new(32.0, 4).validate(12.5).is_ok());
    assert!(Transceiver::new(32.0, 2).validate(12.5).is_err());
    assert!(default_transceivers().iter().all(|t| t.validate(12.5).is_ok()));
}
