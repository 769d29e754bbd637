//! Channel-gain activity detection.

use crate::receiver::dictionary::MmvDictionary;
use crate::receiver::mrc_snapshots;
use crate::receiver::somp::SparseCirSnapshots;
use crate::C64;

/// Per-element noise level of the recovered coefficients, estimated from
/// the residual left after `s` selected atoms.
pub fn residual_noise_floor(snap: &SparseCirSnapshots) -> f64 {
    let dof = snap.rows.saturating_sub(snap.support.len()).max(1);
    snap.residual_energy() / (dof * snap.cols.max(1)) as f64
}

/// Energy of selected tap `s`. Without steering this is the mean energy
/// per column; with the terminal's steering vector the row is first
/// combined across antennas and scaled by `A`, which leaves white noise at
/// the same level and multiplies a tap arriving with that steering by `A`.
pub fn tap_score(snap: &SparseCirSnapshots, s: usize, steering: Option<&[C64]>) -> f64 {
    match steering {
        None => snap.tap_energy(s),
        Some(st) => {
            let a = st.len() as f64;
            let m = mrc_snapshots(&snap.coeffs[s], st);
            a * m.iter().map(|v| v.norm_sqr()).sum::<f64>() / m.len().max(1) as f64
        }
    }
}

fn block_steering<'a>(steering: Option<&'a [Vec<C64>]>, block: usize) -> Option<&'a [C64]> {
    steering.map(|st| st[block].as_slice())
}

/// Terminals whose aggregate tap score (see [`tap_score`]) exceeds
/// `tau * noise_floor`, ascending.
pub fn cg_ad(
    snap: &SparseCirSnapshots,
    dict: &MmvDictionary,
    noise_floor: f64,
    tau: f64,
    steering: Option<&[Vec<C64>]>,
) -> Vec<usize> {
    let mut energy = vec![0.0; dict.blocks];
    for (s, &j) in snap.support.iter().enumerate() {
        let b = dict.locate(j).0;
        energy[b] += tap_score(snap, s, block_steering(steering, b));
    }
    energy
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0 && e > tau * noise_floor)
        .map(|(k, _)| k)
        .collect()
}

/// Selected taps of `terminal` that individually pass the same threshold,
/// as `(support index, delay)` sorted by delay. When several variants of a
/// delay were selected the strongest one represents it.
pub fn terminal_taps(
    snap: &SparseCirSnapshots,
    dict: &MmvDictionary,
    terminal: usize,
    noise_floor: f64,
    tau: f64,
    steering: Option<&[Vec<C64>]>,
) -> Vec<(usize, usize)> {
    let st = block_steering(steering, terminal);
    let mut taps: Vec<(usize, usize)> = snap
        .support
        .iter()
        .enumerate()
        .filter_map(|(s, &j)| {
            let (b, d) = dict.locate(j);
            (b == terminal && tap_score(snap, s, st) > tau * noise_floor).then_some((s, d))
        })
        .collect();
    strongest_per_delay(snap, &mut taps);
    taps
}

/// Sorts `(support index, delay)` pairs by delay and keeps the strongest
/// entry of each delay.
pub fn strongest_per_delay(snap: &SparseCirSnapshots, taps: &mut Vec<(usize, usize)>) {
    taps.sort_by(|a, b| a.1.cmp(&b.1).then(snap.tap_energy(b.0).partial_cmp(&snap.tap_energy(a.0)).unwrap()));
    taps.dedup_by_key(|t| t.1);
}
