//! File-format behavior: parse errors carry locations, malformed inputs are
//! rejected, and random payloads round-trip exactly.

use std::fs;
use std::path::PathBuf;

use nalgebra::DMatrix;
use proptest::prelude::*;
use tempfile::tempdir;

use rmc_cli::error::CliError;
use rmc_cli::formats::csv_log::{render_convergence_csv, CSV_HEADER};
use rmc_cli::formats::dense::{read_dense, write_dense};
use rmc_cli::formats::matrix_market::{read_matrix_market, write_matrix_market};
use rmc_cli::formats::pgm::{read_pgm, read_pgm_dir, write_pgm};
use rmc_core::solver::ConvergenceRecord;
use rmc_core::ObservationSet;

fn write_temp(name: &str, bytes: &[u8]) -> (tempfile::TempDir, PathBuf) {
    let dir = tempdir().unwrap();
    let path = dir.path().join(name);
    fs::write(&path, bytes).unwrap();
    (dir, path)
}

// ---- MatrixMarket ----

#[test]
fn matrix_market_reads_canonical_file() {
    let text = "%%MatrixMarket matrix coordinate real general\n\
                % a comment line\n\
                \n\
                3 2 2\n\
                1 1 2.5\n\
                3 2 -1e-3\n";
    let (_d, path) = write_temp("a.mtx", text.as_bytes());
    let obs = read_matrix_market(&path).unwrap();
    assert_eq!((obs.nrows(), obs.ncols(), obs.nnz()), (3, 2, 2));
    let entries: Vec<_> = obs.iter_entries().map(|(i, j, v, _)| (i, j, v)).collect();
    assert_eq!(entries, vec![(0, 0, 2.5), (2, 1, -1e-3)]);
}

#[test]
fn matrix_market_banner_is_case_insensitive() {
    let text = "%%matrixmarket MATRIX Coordinate Real General\n1 1 1\n1 1 7\n";
    let (_d, path) = write_temp("a.mtx", text.as_bytes());
    assert_eq!(read_matrix_market(&path).unwrap().nnz(), 1);
}

#[test]
fn matrix_market_rejects_wrong_banner() {
    let text = "%%MatrixMarket matrix array real general\n1 1 1\n1 1 7\n";
    let (_d, path) = write_temp("a.mtx", text.as_bytes());
    assert!(read_matrix_market(&path).is_err());
}

#[test]
fn matrix_market_rejects_zero_index_with_line_number() {
    let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n0 1 5.0\n";
    let (_d, path) = write_temp("a.mtx", text.as_bytes());
    match read_matrix_market(&path) {
        Err(CliError::Parse { line, .. }) => assert_eq!(line, 3, "indices are 1-based"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn matrix_market_rejects_out_of_range_index() {
    let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 5.0\n";
    let (_d, path) = write_temp("a.mtx", text.as_bytes());
    assert!(read_matrix_market(&path).is_err());
}

#[test]
fn matrix_market_rejects_entry_count_mismatch() {
    let text = "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 5.0\n";
    let (_d, path) = write_temp("a.mtx", text.as_bytes());
    assert!(read_matrix_market(&path).is_err());
}

#[test]
fn matrix_market_rejects_trailing_fields() {
    let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 5.0 9\n";
    let (_d, path) = write_temp("a.mtx", text.as_bytes());
    assert!(read_matrix_market(&path).is_err());
}

// ---- dense binary ----

#[test]
fn dense_layout_is_header_plus_row_major_le() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.bin");
    let mat = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    write_dense(&path, &mat).unwrap();
    let bytes = fs::read(&path).unwrap();
    let header = b"2 3\n";
    assert_eq!(&bytes[..header.len()], header);
    let payload = &bytes[header.len()..];
    assert_eq!(payload.len(), 6 * 8);
    // row-major: the second value is (0,1)
    assert_eq!(f64::from_le_bytes(payload[8..16].try_into().unwrap()), 2.0);
    assert_eq!(read_dense(&path).unwrap(), mat);
}

#[test]
fn dense_truncated_payload_is_reported() {
    let (_d, path) = write_temp("m.bin", b"2 2\n\x00\x00\x00\x00\x00\x00\x00\x00");
    match read_dense(&path) {
        Err(CliError::TruncatedFile { expected, found, .. }) => {
            assert_eq!(expected, 32);
            assert_eq!(found, 8);
        }
        other => panic!("expected TruncatedFile, got {other:?}"),
    }
}

#[test]
fn dense_trailing_bytes_are_rejected() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("m.bin");
    let mat = DMatrix::from_element(1, 1, 7.0);
    write_dense(&path, &mat).unwrap();
    let mut bytes = fs::read(&path).unwrap();
    bytes.push(0);
    fs::write(&path, &bytes).unwrap();
    assert!(read_dense(&path).is_err());
}

// ---- PGM ----

#[test]
fn pgm_header_comments_are_skipped() {
    let mut bytes = b"P5 # magic\n# a comment\n2 # width\n1\n255\n".to_vec();
    bytes.extend_from_slice(&[0, 255]);
    let (_d, path) = write_temp("f.pgm", &bytes);
    let frame = read_pgm(&path).unwrap();
    assert_eq!((frame.width, frame.height), (2, 1));
    assert_eq!(frame.pixels, vec![0.0, 1.0]);
}

#[test]
fn pgm_sixteen_bit_samples_are_big_endian() {
    let mut bytes = b"P5\n1 1\n65535\n".to_vec();
    bytes.extend_from_slice(&[0x01, 0x00]); // 256
    let (_d, path) = write_temp("f.pgm", &bytes);
    let frame = read_pgm(&path).unwrap();
    assert_eq!(frame.pixels, vec![256.0 / 65535.0]);
}

#[test]
fn pgm_rejects_bad_magic_truncation_and_trailing_bytes() {
    let (_d1, p1) = write_temp("f.pgm", b"P2\n1 1\n255\n0");
    assert!(read_pgm(&p1).is_err());

    let (_d2, p2) = write_temp("f.pgm", b"P5\n2 2\n255\n\x00\x00");
    assert!(matches!(read_pgm(&p2), Err(CliError::TruncatedFile { .. })));

    let (_d3, p3) = write_temp("f.pgm", b"P5\n1 1\n255\n\x00\x00");
    assert!(read_pgm(&p3).is_err());

    let (_d4, p4) = write_temp("f.pgm", b"P5\n1 1\n0\n\x00");
    assert!(read_pgm(&p4).is_err());
}

#[test]
fn pgm_dir_rejects_mixed_frame_sizes() {
    let dir = tempdir().unwrap();
    write_pgm(&dir.path().join("a_0.pgm"), &[0.5; 4], 2, 2, 255).unwrap();
    write_pgm(&dir.path().join("a_1.pgm"), &[0.5; 6], 2, 3, 255).unwrap();
    assert!(matches!(
        read_pgm_dir(dir.path()),
        Err(CliError::InconsistentDimensions { .. })
    ));
}

#[test]
fn pgm_dir_orders_frames_lexicographically() {
    let dir = tempdir().unwrap();
    // written out of order on purpose
    write_pgm(&dir.path().join("f_0002.pgm"), &[2.0 / 255.0], 1, 1, 255).unwrap();
    write_pgm(&dir.path().join("f_0001.pgm"), &[1.0 / 255.0], 1, 1, 255).unwrap();
    write_pgm(&dir.path().join("f_0003.pgm"), &[3.0 / 255.0], 1, 1, 255).unwrap();
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let stack = read_pgm_dir(dir.path()).unwrap();
    assert_eq!(stack.frame_count, 3);
    for t in 0..3 {
        assert_eq!(stack.pixels[(0, t)], (t + 1) as f64 / 255.0);
    }
}

// ---- CSV log ----

#[test]
fn csv_header_and_blank_rel_diff() {
    assert_eq!(
        CSV_HEADER,
        "iter,elapsed_s,F,norm_dU_sq,norm_dS_sq,gamma,epsilon,rel_diff"
    );
    let records = vec![
        ConvergenceRecord {
            iter: 0,
            elapsed_s: 0.5,
            f: 1.25,
            norm_du_sq: 0.25,
            norm_ds_sq: 0.125,
            gamma: 10.0,
            epsilon: 30.0,
            rel_diff: Some(0.5),
        },
        ConvergenceRecord {
            iter: 1,
            elapsed_s: 1.0,
            f: 1.0,
            norm_du_sq: 0.0625,
            norm_ds_sq: 0.03125,
            gamma: 10.0,
            epsilon: 30.0,
            rel_diff: None,
        },
    ];
    let text = render_convergence_csv(&records);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[1].ends_with(",0.5"));
    assert!(lines[2].ends_with(','), "missing ground truth leaves rel_diff blank");
}

// ---- randomized round trips ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_market_round_trips(
        m in 1usize..20,
        n in 1usize..20,
        entries in proptest::collection::vec((0usize..20, 0usize..20, -1e12f64..1e12), 0..60),
    ) {
        let triples: Vec<(usize, usize, f64)> = entries
            .into_iter()
            .map(|(i, j, v)| (i % m, j % n, v))
            .collect();
        // canonicalize: the writer emits one entry per position
        let mut seen = std::collections::BTreeMap::new();
        for (i, j, v) in triples {
            seen.insert((j, i), v);
        }
        let triples: Vec<(usize, usize, f64)> =
            seen.into_iter().map(|((j, i), v)| (i, j, v)).collect();
        let obs = ObservationSet::from_triples(m, n, &triples).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("rt.mtx");
        write_matrix_market(&path, &obs).unwrap();
        prop_assert_eq!(read_matrix_market(&path).unwrap(), obs);
    }

    #[test]
    fn dense_round_trips(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mat = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1e300..1e300));
        let dir = tempdir().unwrap();
        let path = dir.path().join("rt.bin");
        write_dense(&path, &mat).unwrap();
        prop_assert_eq!(read_dense(&path).unwrap(), mat);
    }

    #[test]
    fn pgm_round_trips(w in 1usize..16, h in 1usize..16, maxval in 1u16..=65535, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let column: Vec<f64> = (0..w * h)
            .map(|_| rng.gen_range(0..=maxval) as f64 / maxval as f64)
            .collect();
        let dir = tempdir().unwrap();
        let path = dir.path().join("rt.pgm");
        write_pgm(&path, &column, w, h, maxval).unwrap();
        let frame = read_pgm(&path).unwrap();
        prop_assert_eq!((frame.width, frame.height), (w, h));
        prop_assert_eq!(frame.pixels, column);
    }
}
