use std::net::TcpListener;
use std::process::Command;
use std::time::Duration;

use sharedtf_bench::report::{self, Format};
use sharedtf_bench::workload;
use sharedtf_bench::{ratio_table, run_local, BenchConfig, Protocol, Variant};

fn cfg(protocol: Protocol, rows: usize, n: usize) -> BenchConfig {
    BenchConfig { protocol, rows, n, ..BenchConfig::default() }
}

#[test]
fn config_file_and_versioning() {
    let c = BenchConfig::from_toml("version = 1\nprotocol = \"softmax\"\nn = 32\nvariant = \"nfgen\"\n").unwrap();
    assert_eq!((c.protocol, c.n, c.variant, c.ell), (Protocol::Softmax, 32, Variant::Nfgen, 64));
    assert!(BenchConfig::from_toml("version = 2\n").is_err());
    assert!(BenchConfig::from_toml("version = 1\nbogus = 3\n").is_err());
    let back = BenchConfig::from_toml(&c.to_toml()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn digest_covers_ring_and_shape() {
    let base = BenchConfig::default();
    assert_eq!(base.digest(), BenchConfig::default().digest());
    for other in [
        BenchConfig { ell: 48, ..base.clone() },
        BenchConfig { frac: 13, ..base.clone() },
        BenchConfig { n: 7, ..base.clone() },
        BenchConfig { seed: 9, ..base.clone() },
    ] {
        assert_ne!(other.digest(), base.digest());
    }
}

#[test]
fn softmax_rows_sum_to_one() {
    let r = run_local(&cfg(Protocol::Softmax, 128, 128)).unwrap();
    let tol = 128.0 * 4.0 / 4096.0;
    assert!(r.max_row_sum_error.unwrap() <= tol);
    assert!(r.max_abs_error <= 1e-2);
    assert_eq!(r.shape, vec![128, 128]);
}

#[test]
fn local_runs_are_reproducible() {
    let c = cfg(Protocol::Gelu, 2, 300);
    let a = run_local(&c).unwrap();
    let b = run_local(&c).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());
    assert!(a.max_abs_error <= 1.0 / 256.0 + 4.0 / 4096.0);
}

#[test]
fn encoder_traffic_grows_with_sequence() {
    let short = run_local(&BenchConfig { protocol: Protocol::Encoder, seq: 4, ..BenchConfig::default() }).unwrap();
    let long = run_local(&BenchConfig { protocol: Protocol::Encoder, seq: 16, ..BenchConfig::default() }).unwrap();
    assert!(short.online_bytes < long.online_bytes);
    assert!(short.offline_bytes < long.offline_bytes);
    assert!(long.max_abs_error <= 0.1);
}

#[test]
fn report_formats_roundtrip() {
    let a = run_local(&cfg(Protocol::Exp, 1, 64)).unwrap();
    let b = run_local(&BenchConfig { variant: Variant::Nfgen, ..cfg(Protocol::Exp, 1, 64) }).unwrap();
    let reports = vec![a, b];
    assert_eq!(report::from_json(&report::to_json(&reports)).unwrap(), reports);
    let csv = report::to_csv(&reports).unwrap();
    assert_eq!(csv.lines().count(), 1 + reports.len());
    assert_eq!(report::from_csv(&csv).unwrap(), reports);
}

#[test]
fn ratio_table_is_plain_division() {
    let e = run_local(&cfg(Protocol::Tanh, 1, 128)).unwrap();
    let b = run_local(&BenchConfig { variant: Variant::Nfgen, ..cfg(Protocol::Tanh, 1, 128) }).unwrap();
    let rows = ratio_table(std::slice::from_ref(&e), std::slice::from_ref(&b)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].offline_ratio, e.offline_bytes as f64 / b.offline_bytes as f64);
    assert_eq!(rows[0].online_ratio, e.online_bytes as f64 / b.online_bytes as f64);
    assert_eq!(rows[0].rounds_ratio, e.rounds as f64 / b.rounds as f64);
    let other = run_local(&cfg(Protocol::Tanh, 1, 64)).unwrap();
    assert!(ratio_table(&[e], &[other]).is_err());
}

#[test]
fn tcp_parties_match_local_totals() {
    let c = cfg(Protocol::Layernorm, 4, 64);
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (server, client) = std::thread::scope(|s| {
        let h = s.spawn(|| workload::connect(addr, &c, Duration::from_secs(10)));
        (workload::serve(&listener, &c).unwrap(), h.join().unwrap().unwrap())
    });
    let local = run_local(&c).unwrap();
    assert_eq!(server.online_bytes + client.online_bytes, local.online_bytes);
    assert_eq!(server.offline_bytes + client.offline_bytes, local.offline_bytes);
    assert_eq!(server.rounds.max(client.rounds), local.rounds);
    assert_eq!(server.max_abs_error, client.max_abs_error);
    assert!(local.max_abs_error <= 1e-2);
}

#[test]
fn handshake_rejects_mismatched_configs() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let a = cfg(Protocol::Gelu, 1, 16);
    let b = BenchConfig { frac: 14, ..a.clone() };
    let (rs, rc) = std::thread::scope(|s| {
        let h = s.spawn(|| workload::connect(addr, &b, Duration::from_secs(10)));
        (workload::serve(&listener, &a), h.join().unwrap())
    });
    for r in [rs, rc] {
        assert!(r.unwrap_err().to_string().contains("mismatch"));
    }
}

#[test]
fn binary_local_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_sharedtf-bench");
    let conf = dir.path().join("bench.toml");
    std::fs::write(&conf, "version = 1\nprotocol = \"gelu\"\nn = 256\n").unwrap();
    let east = dir.path().join("east.csv");
    let base = dir.path().join("base.json");
    for (variant, path) in [("east", &east), ("nfgen", &base)] {
        let st = Command::new(bin)
            .args(["local", "--config"])
            .arg(&conf)
            .args(["--variant", variant, "--report-path"])
            .arg(path)
            .status()
            .unwrap();
        assert!(st.success());
    }
    assert_eq!(Format::from_path(&east), Format::Csv);
    let out = Command::new(bin).arg("compare").arg(&east).arg(&base).args(["--format", "json"]).output().unwrap();
    assert!(out.status.success());
    let rows: Vec<sharedtf_bench::RatioRow> = serde_json::from_slice(&out.stdout).unwrap();
    let e = &report::read_reports(&east).unwrap()[0];
    let b = &report::read_reports(&base).unwrap()[0];
    assert_eq!(rows[0].offline_ratio, e.offline_bytes as f64 / b.offline_bytes as f64);
    assert!(Command::new(bin).args(["local", "--protocol", "gelu", "--n", "0"]).output().unwrap().status.code() != Some(0));
}
