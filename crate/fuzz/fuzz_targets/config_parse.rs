#![no_main]

use libfuzzer_sys::fuzz_target;
use qrecur::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::parse(text) {
        // Whatever parses must survive its own echo unchanged.
        let echo = cfg.to_text();
        let again = RunConfig::parse(&echo).expect("echoed config parses");
        assert_eq!(again, cfg);
        let _ = cfg.sweep_axes();
    }
});
