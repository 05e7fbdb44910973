use std::path::PathBuf;

use jflow_cli::config::{parse_config, to_toml, ModeSpec, RunConfig};
use jflow_cli::series::{read_series, write_series};
use jflow_core::DiagnosticsRecord;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
        Just(f64::MAX),
        -1e6..1e6f64,
        proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::NEGATIVE | proptest::num::f64::POSITIVE,
    ]
}

fn record() -> impl Strategy<Value = DiagnosticsRecord> {
    proptest::array::uniform12(finite()).prop_map(DiagnosticsRecord::from_values)
}

fn mode(n: i32) -> impl Strategy<Value = ModeSpec> {
    let k = 1 - n / 2..n / 2;
    (proptest::array::uniform4(k), 1e-4..0.05f64, -3.0..3.0f64).prop_map(|(k, amplitude, phase)| ModeSpec {
        k,
        amplitude,
        phase,
    })
}

fn config() -> impl Strategy<Value = RunConfig> {
    let matrix = (0.5..3.0f64, 0.5..3.0f64, -0.2..0.2f64, -0.2..0.2f64, any::<bool>())
        .prop_map(|(a, b, re, im, six)| if six { vec![a, b, re, im, 0.0, 0.0] } else { vec![a, b, re, im] });
    (
        proptest::array::uniform4(prop_oneof![Just(4i64), Just(6), Just(8), Just(16)]),
        matrix.clone(),
        matrix,
        (1e-3..1.0f64, 1e-14..1e-6f64, 1e-3..1e4f64),
        (1..1000u64, 0..1000u64, proptest::option::of(0.0..10.0f64), any::<u64>()),
        ("[a-z][a-z0-9_/]{0,12}", 1e-14..1e-8f64, 1..100u64),
        proptest::collection::vec(mode(4), 0..4),
    )
        .prop_map(
            |(grid, g, h, (sigma, tol_stop, t_max), (sample, snap, a, seed), (dir, ntol, nmax), psi0_spec)| RunConfig {
                grid: grid.to_vec(),
                g,
                h,
                sigma,
                tol_stop,
                t_max,
                sample_interval: sample,
                snapshot_interval: snap,
                a_override: a,
                seed,
                output_dir: PathBuf::from(dir),
                newton_tol: ntol,
                newton_max_iter: nmax,
                psi0_spec,
            },
        )
}

proptest! {
    #[test]
    fn series_csv_round_trips_bit_for_bit(records in proptest::collection::vec(record(), 0..20)) {
        let mut buf = Vec::new();
        write_series(&mut buf, &records).unwrap();
        let back = read_series(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            let bits = |r: &DiagnosticsRecord| r.values().map(f64::to_bits);
            prop_assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn valid_configs_round_trip_through_toml(cfg in config()) {
        prop_assert!(cfg.validate().is_ok(), "{:?}", cfg.validate());
        let text = to_toml(&cfg);
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
