use flowroi::config::CONFIG_KEYS;
use flowroi::PipelineConfig;

#[test]
fn kv_roundtrip_of_defaults_and_edits() {
    let c = PipelineConfig::default();
    assert_eq!(PipelineConfig::from_kv(&c.to_kv()).unwrap(), c);
    let mut e = c.clone();
    for (k, v) in [
        ("denoise", "off"),
        ("roi-threshold", "0.35"),
        ("adjacent-factor", "2"),
        ("scaling-factor", "7"),
        ("compression-rate", "25.5"),
        ("saliency-gradient", "flow"),
        ("seed", "99"),
    ] {
        e.set(k, v).unwrap();
    }
    assert!(!e.denoise.enabled);
    assert_eq!((e.roi.adjacent_factor, e.codec.scaling_factor), (2, 7));
    assert_eq!(PipelineConfig::from_kv(&e.to_kv()).unwrap(), e);
}

#[test]
fn every_key_is_listed_and_settable() {
    let c = PipelineConfig::default();
    let pairs = c.kv_pairs();
    for key in CONFIG_KEYS {
        let v = pairs.get(key).unwrap_or_else(|| panic!("{key} missing from kv_pairs"));
        let mut d = PipelineConfig::default();
        d.set(key, v).unwrap();
        assert_eq!(d, c, "{key}");
    }
    assert_eq!(pairs.len(), CONFIG_KEYS.len());
}

#[test]
fn invalid_values_rejected() {
    let mut c = PipelineConfig::default();
    for (k, v) in [
        ("roi-threshold", "1.5"),
        ("scaling-factor", "11"),
        ("compression-rate", "1"),
        ("flow-window", "4"),
        ("denoise", "maybe"),
        ("no-such-key", "1"),
    ] {
        let ok = c.set(k, v).and_then(|_| c.validate());
        assert!(ok.is_err(), "{k}={v} accepted");
        c = PipelineConfig::default();
    }
    assert!(PipelineConfig::from_kv("roi-threshold 0.2").is_err());
    let c = PipelineConfig::from_kv("# comment\n\nroi-threshold = 0.3\n").unwrap();
    assert_eq!(c.roi.roi_threshold, 0.3);
}
