//! Write a Level-5 MAT-file holding a drive-end channel, read it back, and
//! show that compression and byte order do not change what is parsed.
//!
//! ```bash
//! cargo run --example mat_file
//! ```

use faultlab::ingest::mat5::{parse_mat5, write_mat5, Endianness, MatMatrix};

fn main() -> faultlab::Result<()> {
    let signal: Vec<f64> = (0..4800).map(|i| (i as f64 * 0.05).sin()).collect();
    let de = MatMatrix::column(signal.clone());
    let rpm = MatMatrix::from_row_major(1, 1, vec![1750.0])?;
    let vars = [("X097_DE_time", &de), ("X097RPM", &rpm)];

    for endian in [Endianness::Little, Endianness::Big] {
        for compress in [false, true] {
            let bytes = write_mat5(&vars, endian, compress);
            let parsed = parse_mat5(&bytes)?;
            let back = parsed["X097_DE_time"].clone().into_vector()?;
            println!(
                "{endian:?} compressed={compress}: {} bytes, variables {:?}, exact={}",
                bytes.len(),
                parsed.keys().collect::<Vec<_>>(),
                back == signal
            );
        }
    }

    let mut corrupt = write_mat5(&vars, Endianness::Little, false);
    corrupt[0] = b'X';
    println!("corrupt header: {}", parse_mat5(&corrupt).unwrap_err());
    Ok(())
}
