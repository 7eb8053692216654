#![no_main]
use libfuzzer_sys::fuzz_target;
use osl_core::osl::{parse_osl, to_osl};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_osl(text) {
        // anything accepted must survive a print/parse cycle
        let printed = to_osl(&spec);
        assert_eq!(parse_osl(&printed).as_ref(), Ok(&spec), "{printed}");
    }
});
