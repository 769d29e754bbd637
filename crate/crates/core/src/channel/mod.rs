//! LEO terrestrial-satellite uplink channel.

pub mod apply;
pub mod geometry;
pub mod lattice;
pub mod population;

pub use apply::{apply_channel, apply_cyclic, doppler_phase, noise_variance, propagate_into};
pub use geometry::{doppler_from_geometry, ConstellationGeometry};
pub use lattice::{dd_cir_on_lattice, dd_circular_response, DdCir};
pub use population::{
    draw_activity, draw_population, ActivityPattern, ChannelConfig, ChannelRealization, PathParams,
    TerminalChannel, TerminalProfile,
};
