#![no_main]

use hearthguard::meshbus::{decode_frame, encode_frame, FrameDecoder};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(frame) = decode_frame(data) {
        let body = encode_frame(&frame).expect("decoded frames are valid");
        assert_eq!(decode_frame(&body).unwrap(), frame);
    }

    // same bytes as a stream, fed in uneven chunks
    let mut dec = FrameDecoder::new();
    for chunk in data.chunks(7) {
        dec.push(chunk);
        loop {
            match dec.next_frame() {
                Ok(Some(_)) => {}
                Ok(None) | Err(_) => break,
            }
        }
    }
});
