#![no_main]

use libfuzzer_sys::fuzz_target;
use lls_core::metrics::RunReport;
use lls_core::output::{read_bins, write_bins};

fuzz_target!(|data: &[u8]| {
    let Ok(traces) = read_bins(data) else { return };
    let _ = RunReport::from_traces("fuzz", 0, &traces, &[], 1e3);
    let mut out = Vec::new();
    write_bins(&traces, &mut out).unwrap();
    assert_eq!(read_bins(out.as_slice()).unwrap(), traces);
});
