#![no_main]

use libfuzzer_sys::fuzz_target;
use sam_core::data::ObservationSeries;

fuzz_target!(|data: &[u8]| {
    // Anything that parses must survive a write/read roundtrip unchanged.
    if let Ok(series) = ObservationSeries::read_csv(data) {
        let mut out = Vec::new();
        series.write_csv(&mut out).unwrap();
        let back = ObservationSeries::read_csv(out.as_slice()).unwrap();
        assert_eq!(back, series);
        assert_eq!(series.transitions().len(), series.intervals());
    }
});
