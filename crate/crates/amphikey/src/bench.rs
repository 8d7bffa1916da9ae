//! Measurement harness: per-primitive and per-handshake latency, plus the
//! derived session-establishment throughput metric.
//!
//! Absolute timings are hardware-specific and are reported for context
//! only; the machine-independent claims are ordering properties (signing
//! slower than verification, KEM operations slower than AEAD, Deniable
//! handshake cheaper than Authenticated). Cycle counts are wall-time ×
//! nominal-frequency estimates when no hardware counter is available, and
//! are labeled as such.
//!
//! Throughput is derived from handshake latency exactly as
//! `mbps = payload_bytes × 8 / handshake_ns × 1000`: the reciprocal of the
//! handshake latency is the maximum session-establishment rate, multiplied
//! by an assumed MTU-sized payload per session.

use std::hint::black_box;
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::channel::{open_record, seal_record};
use crate::handshake::{
    client_finish, client_respond, server_finish, server_hello, HandshakeConfig, Mode,
};
use crate::pki::issue_cert;
use crate::suite::{aead_open, aead_seal, kdf_extract_expand, mac, sig_keygen, SuiteDescriptor};
use crate::wire::MSG_TABLE_DATA;

/// The paper-style MTU payload assumption for throughput derivation.
pub const ASSUMED_PAYLOAD_BYTES: u64 = 1500;

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("iterations must be positive")]
    ZeroIterations,
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("bench setup failed: {0}")]
    Setup(String),
}

/// One measured operation.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub operation: String,
    pub participant: String,
    pub median_ns: u64,
    pub mean_ns: u64,
    pub iterations: u32,
}

/// Metrics computed from measured totals, not measured directly.
#[derive(Debug, Clone)]
pub struct DerivedMetrics {
    pub mode: String,
    pub handshake_total_ns: u64,
    pub throughput_mbps: f64,
}

/// A full report: measured rows plus derived metrics.
#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub derived: Option<DerivedMetrics>,
    /// Nominal frequency in GHz used for cycle estimates, when known.
    pub ghz_estimate: Option<f64>,
}

impl BenchReport {
    pub fn row(&self, operation: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.operation == operation)
    }

    pub fn median(&self, operation: &str) -> Option<u64> {
        self.row(operation).map(|r| r.median_ns)
    }

    /// Aligned text table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let op_width = self
            .rows
            .iter()
            .map(|r| r.operation.len())
            .chain(["operation".len()])
            .max()
            .unwrap_or(12);
        out.push_str(&format!(
            "{:<op_width$}  {:<12}  {:>12}  {:>12}  {:>10}",
            "operation", "participant", "median_ns", "mean_ns", "iters"
        ));
        if self.ghz_estimate.is_some() {
            out.push_str(&format!("  {:>14}", "cycles(est)"));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:<op_width$}  {:<12}  {:>12}  {:>12}  {:>10}",
                r.operation, r.participant, r.median_ns, r.mean_ns, r.iterations
            ));
            if let Some(ghz) = self.ghz_estimate {
                out.push_str(&format!("  {:>14.0}", r.median_ns as f64 * ghz));
            }
            out.push('\n');
        }
        if let Some(d) = &self.derived {
            out.push_str(&format!(
                "derived: mode={} handshake_total_ns={} throughput_mbps={:.1} (assumes {} B payload per handshake)\n",
                d.mode, d.handshake_total_ns, d.throughput_mbps, ASSUMED_PAYLOAD_BYTES
            ));
        }
        if self.ghz_estimate.is_some() {
            out.push_str("note: cycle counts are wall-time x nominal-frequency estimates\n");
        }
        out
    }

    /// CSV with a fixed header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("operation,participant,median_ns,mean_ns,iterations\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.operation, r.participant, r.median_ns, r.mean_ns, r.iterations
            ));
        }
        if let Some(d) = &self.derived {
            out.push_str(&format!(
                "derived:{}:handshake_total_ns,,{},,\nderived:{}:throughput_mbps,,{:.3},,\n",
                d.mode, d.handshake_total_ns, d.mode, d.throughput_mbps
            ));
        }
        out
    }
}

/// Throughput from handshake latency: `payload_bytes × 8 / handshake_ns ×
/// 1000` megabits per second. Exact arithmetic, no measurement.
pub fn throughput_from_latency(handshake_ns: i64, payload_bytes: i64) -> Result<f64, BenchError> {
    if handshake_ns <= 0 {
        return Err(BenchError::DomainError(format!(
            "handshake_ns must be positive, got {handshake_ns}"
        )));
    }
    if payload_bytes <= 0 {
        return Err(BenchError::DomainError(format!(
            "payload_bytes must be positive, got {payload_bytes}"
        )));
    }
    Ok(payload_bytes as f64 * 8.0 / handshake_ns as f64 * 1000.0)
}

fn summarize(mut samples: Vec<u64>) -> (u64, u64) {
    samples.sort_unstable();
    let median = samples[samples.len() / 2];
    let mean = (samples.iter().map(|s| *s as u128).sum::<u128>() / samples.len() as u128) as u64;
    (median, mean)
}

fn time_loop(iterations: u32, mut f: impl FnMut()) -> (u64, u64) {
    // Short warmup so first-touch effects stay out of the samples.
    for _ in 0..iterations.min(8) {
        f();
    }
    let mut samples = Vec::with_capacity(iterations as usize);
    for _ in 0..iterations {
        let start = Instant::now();
        f();
        samples.push(start.elapsed().as_nanos() as u64);
    }
    summarize(samples)
}

/// Nominal CPU frequency in GHz, when the platform exposes it.
pub fn nominal_ghz() -> Option<f64> {
    let cpuinfo = std::fs::read_to_string("/proc/cpuinfo").ok()?;
    for line in cpuinfo.lines() {
        if let Some(rest) = line.strip_prefix("cpu MHz") {
            let mhz: f64 = rest.trim_start_matches([':', '\t', ' ']).trim().parse().ok()?;
            return Some(mhz / 1000.0);
        }
    }
    None
}

/// Measure every primitive operation the suite's handshake and record layer
/// touch: key generation, encapsulation/decapsulation, signing and
/// verification, AEAD on an MTU-sized record, and the KDF/MAC steps.
pub fn bench_primitives(
    suite: &SuiteDescriptor,
    iterations: u32,
) -> Result<BenchReport, BenchError> {
    if iterations == 0 {
        return Err(BenchError::ZeroIterations);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(0xbe7c);
    let mut rows = Vec::new();
    let mut push = |operation: String, (median_ns, mean_ns): (u64, u64)| {
        rows.push(BenchRow {
            operation,
            participant: "local".into(),
            median_ns,
            mean_ns,
            iterations,
        });
    };

    let kem1 = suite.kem1();
    let kem2 = suite.kem2();

    push(
        format!("{} keygen", kem1.name()),
        time_loop(iterations, || {
            black_box(kem1.keygen(&mut rng));
        }),
    );
    push(
        format!("{} keygen", kem2.name()),
        time_loop(iterations, || {
            black_box(kem2.keygen(&mut rng));
        }),
    );

    let kp1 = kem1.keygen(&mut rng);
    push(
        format!("{} encapsulation", kem1.name()),
        time_loop(iterations, || {
            black_box(kem1.encaps(&kp1.public, &mut rng).expect("encaps"));
        }),
    );
    let (ct1, _) = kem1.encaps(&kp1.public, &mut rng).expect("encaps");
    push(
        format!("{} decapsulation", kem1.name()),
        time_loop(iterations, || {
            black_box(kem1.decaps(kp1.secret_bytes(), &ct1).expect("decaps"));
        }),
    );

    let kp2 = kem2.keygen(&mut rng);
    push(
        format!("{} shared secret", kem2.name()),
        time_loop(iterations, || {
            black_box(kem2.encaps(&kp2.public, &mut rng).expect("encaps"));
        }),
    );

    if let Some(sig) = suite.sig() {
        push(
            format!("{} keygen", sig.name()),
            time_loop(iterations, || {
                black_box(sig.keygen(&mut rng));
            }),
        );
        let skp = sig.keygen(&mut rng);
        let msg = vec![0x42u8; 1120];
        push(
            format!("{} signing", sig.name()),
            time_loop(iterations, || {
                black_box(sig.sign(skp.secret_bytes(), &msg).expect("sign"));
            }),
        );
        let signature = sig.sign(skp.secret_bytes(), &msg).expect("sign");
        push(
            format!("{} verification", sig.name()),
            time_loop(iterations, || {
                black_box(sig.verify(&skp.public, &msg, &signature));
            }),
        );
    }

    let key = [7u8; 16];
    let nonce = [9u8; 16];
    let record = vec![0x5au8; ASSUMED_PAYLOAD_BYTES as usize];
    push(
        format!("{} encryption", suite.aead_name),
        time_loop(iterations, || {
            black_box(aead_seal(&key, &nonce, b"bench", &record).expect("seal"));
        }),
    );
    let sealed = aead_seal(&key, &nonce, b"bench", &record).expect("seal");
    push(
        format!("{} decryption", suite.aead_name),
        time_loop(iterations, || {
            black_box(aead_open(&key, &nonce, b"bench", &sealed).expect("open"));
        }),
    );

    push(
        format!("{} derivation", suite.kdf_name),
        time_loop(iterations, || {
            black_box(kdf_extract_expand(&key, b"", b"amphikey/v1/bench", 32).expect("kdf"));
        }),
    );
    push(
        format!("{} tag", suite.mac_name),
        time_loop(iterations, || {
            black_box(mac(&key, &record));
        }),
    );

    Ok(BenchReport {
        rows,
        derived: None,
        ghz_estimate: nominal_ghz(),
    })
}

/// Measure the handshake phase by phase over an in-process loopback, plus
/// one MTU-sized record in each direction, and derive the throughput
/// metric from the measured total.
pub fn bench_handshake(
    suite: &SuiteDescriptor,
    iterations: u32,
) -> Result<BenchReport, BenchError> {
    if iterations == 0 {
        return Err(BenchError::ZeroIterations);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(0xbe7c_57a9);
    let mode = Mode::of_suite(suite);

    // Long-term material is provisioned once, outside the measured loop.
    let (client_cfg, server_cfg) = match mode {
        Mode::Deniable => {
            let mut cfg = HandshakeConfig::deniable();
            cfg.suite_id = suite.suite_id;
            (cfg.clone(), cfg)
        }
        Mode::Authenticated => {
            let sig_name = suite
                .sig_name
                .ok_or_else(|| BenchError::Setup("authenticated suite without signature".into()))?;
            let ca = sig_keygen(sig_name, &mut rng)
                .map_err(|e| BenchError::Setup(e.to_string()))?;
            let kp = sig_keygen(sig_name, &mut rng)
                .map_err(|e| BenchError::Setup(e.to_string()))?;
            let cert = issue_cert(
                ca.secret_bytes(),
                "bench-client",
                suite.suite_id,
                &kp.public,
                (0, u64::MAX),
            )
            .map_err(|e| BenchError::Setup(e.to_string()))?;
            (
                HandshakeConfig::authenticated_client(
                    suite.suite_id,
                    cert,
                    kp.secret_bytes().to_vec(),
                ),
                HandshakeConfig::authenticated_server(suite.suite_id, ca.public.clone()),
            )
        }
    };

    let phases = [
        ("server hello", "server"),
        ("client respond", "client"),
        ("server finish", "server"),
        ("client finish", "client"),
        ("record seal", "client"),
        ("record open", "server"),
    ];
    let mut samples: Vec<Vec<u64>> = vec![Vec::with_capacity(iterations as usize); phases.len()];
    let mut totals: Vec<u64> = Vec::with_capacity(iterations as usize);
    let record = vec![0xA5u8; ASSUMED_PAYLOAD_BYTES as usize];

    for _ in 0..iterations {
        let t0 = Instant::now();
        let (hello, server_session) =
            server_hello(&server_cfg, &mut rng).map_err(|e| BenchError::Setup(e.to_string()))?;
        let hello_bytes = hello.encode();
        let d_hello = t0.elapsed().as_nanos() as u64;

        let t1 = Instant::now();
        let (client_keys, client_session) = client_respond(&client_cfg, &hello_bytes, &mut rng)
            .map_err(|e| BenchError::Setup(e.to_string()))?;
        let d_respond = t1.elapsed().as_nanos() as u64;

        let t2 = Instant::now();
        let finish = server_finish(server_session, &client_keys, 1)
            .map_err(|e| BenchError::Setup(e.to_string()))?;
        let d_finish = t2.elapsed().as_nanos() as u64;

        let t3 = Instant::now();
        let established = client_finish(client_session, &finish.confirm.encode())
            .map_err(|e| BenchError::Setup(e.to_string()))?;
        let d_client_finish = t3.elapsed().as_nanos() as u64;

        let t4 = Instant::now();
        let sealed = seal_record(&established.keys.c2s, MSG_TABLE_DATA, 0, &record)
            .map_err(|e| BenchError::Setup(e.to_string()))?;
        let d_seal = t4.elapsed().as_nanos() as u64;

        let t5 = Instant::now();
        black_box(
            open_record(&finish.keys.c2s, MSG_TABLE_DATA, 0, &sealed)
                .map_err(|e| BenchError::Setup(e.to_string()))?,
        );
        let d_open = t5.elapsed().as_nanos() as u64;

        for (bucket, d) in samples.iter_mut().zip([
            d_hello,
            d_respond,
            d_finish,
            d_client_finish,
            d_seal,
            d_open,
        ]) {
            bucket.push(d);
        }
        totals.push(d_hello + d_respond + d_finish + d_client_finish);
    }

    let mut rows = Vec::with_capacity(phases.len() + 2);
    let mut role_totals = [(0u64, 0u64); 2]; // (server, client) medians summed
    for ((name, participant), bucket) in phases.iter().zip(samples) {
        let (median_ns, mean_ns) = summarize(bucket);
        if *name != "record seal" && *name != "record open" {
            if *participant == "server" {
                role_totals[0].0 += median_ns;
                role_totals[0].1 += mean_ns;
            } else {
                role_totals[1].0 += median_ns;
                role_totals[1].1 += mean_ns;
            }
        }
        rows.push(BenchRow {
            operation: (*name).into(),
            participant: (*participant).into(),
            median_ns,
            mean_ns,
            iterations,
        });
    }
    rows.push(BenchRow {
        operation: "handshake total".into(),
        participant: "server".into(),
        median_ns: role_totals[0].0,
        mean_ns: role_totals[0].1,
        iterations,
    });
    rows.push(BenchRow {
        operation: "handshake total".into(),
        participant: "client".into(),
        median_ns: role_totals[1].0,
        mean_ns: role_totals[1].1,
        iterations,
    });

    let (total_median, _) = summarize(totals);
    rows.push(BenchRow {
        operation: "handshake total".into(),
        participant: "both".into(),
        median_ns: total_median,
        mean_ns: 0,
        iterations,
    });
    let throughput =
        throughput_from_latency(total_median as i64, ASSUMED_PAYLOAD_BYTES as i64)?;

    Ok(BenchReport {
        rows,
        derived: Some(DerivedMetrics {
            mode: mode_label(mode),
            handshake_total_ns: total_median,
            throughput_mbps: throughput,
        }),
        ghz_estimate: nominal_ghz(),
    })
}

fn mode_label(mode: Mode) -> String {
    match mode {
        Mode::Deniable => "deniable".into(),
        Mode::Authenticated => "authenticated".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suite::{suite_by_id, SUITE_ID_AUTH_1, SUITE_ID_DEN_1};

    // Table 1 reproduction: the two published latencies give the published
    // throughputs.
    #[test]
    fn throughput_matches_published_values() {
        let deniable = throughput_from_latency(86_983, 1500).unwrap();
        assert!((deniable - 138.0).abs() < 0.1, "{deniable}");
        let authenticated = throughput_from_latency(507_045, 1500).unwrap();
        assert!((authenticated - 23.7).abs() < 0.1, "{authenticated}");
    }

    #[test]
    fn throughput_unit_identity() {
        // 125000 bytes in one second is exactly 1 Mbps.
        let mbps = throughput_from_latency(1_000_000_000, 125_000).unwrap();
        assert_eq!(mbps, 1.0);
    }

    #[test]
    fn throughput_rejects_nonpositive() {
        assert!(throughput_from_latency(0, 1500).is_err());
        assert!(throughput_from_latency(-5, 1500).is_err());
        assert!(throughput_from_latency(100, 0).is_err());
    }

    #[test]
    fn zero_iterations_is_an_error() {
        let suite = suite_by_id(SUITE_ID_DEN_1).unwrap();
        assert_eq!(
            bench_primitives(suite, 0).unwrap_err(),
            BenchError::ZeroIterations
        );
        assert_eq!(
            bench_handshake(suite, 0).unwrap_err(),
            BenchError::ZeroIterations
        );
    }

    #[test]
    fn primitive_report_covers_the_operation_set() {
        let suite = suite_by_id(SUITE_ID_AUTH_1).unwrap();
        let report = bench_primitives(suite, 3).unwrap();
        for op in [
            "ml-kem-768 keygen",
            "x25519 keygen",
            "dilithium3 keygen",
            "ml-kem-768 encapsulation",
            "ml-kem-768 decapsulation",
            "x25519 shared secret",
            "dilithium3 signing",
            "dilithium3 verification",
            "ascon-128a encryption",
            "ascon-128a decryption",
            "hkdf-sha256 derivation",
            "hmac-sha256 tag",
        ] {
            assert!(report.row(op).is_some(), "missing row {op}");
        }
        let csv = report.to_csv();
        assert!(csv.starts_with("operation,participant,median_ns"));
        assert!(report.to_text().contains("median_ns"));
    }

    #[test]
    fn handshake_report_has_phase_rows_and_derived_metrics() {
        let suite = suite_by_id(SUITE_ID_DEN_1).unwrap();
        let report = bench_handshake(suite, 3).unwrap();
        for op in [
            "server hello",
            "client respond",
            "server finish",
            "client finish",
            "record seal",
            "record open",
            "handshake total",
        ] {
            assert!(report.row(op).is_some(), "missing row {op}");
        }
        let derived = report.derived.as_ref().unwrap();
        assert!(derived.handshake_total_ns > 0);
        assert!(derived.throughput_mbps > 0.0);
    }
}
