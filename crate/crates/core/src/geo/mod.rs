//! Geodetic conversion, trip files, channel extraction and trip ranking.

mod channels;
mod enu;
mod io;
mod rank;

pub use channels::{
    extract_channels, split_at_gaps, unwrap_angles, Position, RawTripRecord, Trajectory, HEADING_HOLD_SPEED, MAX_GAP_S,
};
pub use enu::{
    ecef_to_enu, ecef_to_geodetic, enu_to_ecef, enu_to_geodetic, geodetic_to_ecef, geodetic_to_enu, Ecef, Enu,
    Geodetic, WGS84_A, WGS84_F,
};
pub use io::{
    bearing_deg_to_enu_rad, enu_rad_to_bearing_deg, load_corpus_dir, read_trip_csv, write_trajectory_csv,
    write_trajectory_file, CorpusLoad,
};
pub use rank::{count_stops, rank_trips, TripRank, STOP_MIN_S, STOP_SPEED};
