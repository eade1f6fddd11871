#![no_main]

use libfuzzer_sys::fuzz_target;
use qrecur::{CurveKind, FrequencyCurve};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for kind in [CurveKind::H0, CurveKind::Omega1] {
        let Ok(curve) = FrequencyCurve::parse(text, kind) else {
            continue;
        };
        let samples = curve.samples();
        assert!(samples.len() >= FrequencyCurve::MIN_SAMPLES);
        assert!(samples.windows(2).all(|w| w[0].0 < w[1].0));
        let (lo, hi) = curve.range();
        for x in [lo, 0.5 * (lo + hi), hi] {
            if x.is_finite() && lo <= x && x <= hi {
                let _ = curve.value_at(x);
            }
        }
    }
});
