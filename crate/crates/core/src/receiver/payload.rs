//! Payload receive chain shared by the OTFS schemes.

use crate::channel::apply::response;
use crate::channel::TerminalChannel;
use crate::grid::DdGrid;
use crate::numerology::OtfsNumerology;
use crate::waveform::OtfsModem;
use crate::C64;

/// Removes the response of known transmitted samples (training sequences
/// or pilots), one `(channel, frame)` pair per terminal.
pub fn subtract_known(received: &mut [Vec<C64>], known: &[(&TerminalChannel, &[C64])], fs: f64) {
    let len = received.first().map_or(0, |r| r.len());
    for (ch, frame) in known {
        let z = response(frame, ch, fs, len);
        for (row, s) in received.iter_mut().zip(&ch.steering) {
            for (o, v) in row.iter_mut().zip(&z) {
                *o -= s * v;
            }
        }
    }
}

/// Cuts the `N` payload blocks, folds the `L - 1` samples of channel
/// memory that spill past each block back onto its head (overlap-add), and
/// OTFS-demodulates; one grid per antenna.
pub fn demodulate_payload(received: &[Vec<C64>], num: &OtfsNumerology, modem: &OtfsModem) -> Vec<DdGrid> {
    let spill = num.delay_window().saturating_sub(1).min(num.m_t).min(num.m);
    received
        .iter()
        .map(|r| {
            let mut blocks = Vec::with_capacity(num.n * num.m);
            for n in 0..num.n {
                let s = num.payload_start(n);
                let mut b: Vec<C64> = r[s..s + num.m].to_vec();
                for q in 0..spill {
                    b[q] += r[s + num.m + q];
                }
                blocks.extend(b);
            }
            modem.demodulate(&blocks).expect("block length matches modem")
        })
        .collect()
}
