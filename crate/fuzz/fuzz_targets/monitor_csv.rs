#![no_main]

use blowup_core::solver::StepMonitor;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(monitor) = StepMonitor::from_csv(text) {
        let again = StepMonitor::from_csv(&monitor.to_csv()).expect("written monitor parses");
        assert_eq!(again.records.len(), monitor.records.len());
    }
});
