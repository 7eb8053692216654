#![no_main]
use libfuzzer_sys::fuzz_target;
use osl_core::emit::from_source;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    for op in ["DepthToSpace", "Gemm", ""] {
        if let Ok(alg) = from_source(&text, op) {
            assert!(alg.entry_function.starts_with(op));
        }
    }
});
