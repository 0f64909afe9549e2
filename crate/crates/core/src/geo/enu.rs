//! WGS-84 geodetic coordinates and the local East-North-Up frame.

use serde::{Deserialize, Serialize};

/// WGS-84 semi-major axis in meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodetic {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

impl Geodetic {
    pub fn new(lat_deg: f64, lon_deg: f64, alt_m: f64) -> Self {
        Self {
            lat_deg,
            lon_deg,
            alt_m,
        }
    }

    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat_deg) && (-180.0..=180.0).contains(&self.lon_deg) && self.alt_m.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ecef {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enu {
    pub east: f64,
    pub north: f64,
    pub up: f64,
}

pub fn geodetic_to_ecef(p: Geodetic) -> Ecef {
    let lat = p.lat_deg.to_radians();
    let lon = p.lon_deg.to_radians();
    let (sin_lat, cos_lat) = lat.sin_cos();
    let (sin_lon, cos_lon) = lon.sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    Ecef {
        x: (n + p.alt_m) * cos_lat * cos_lon,
        y: (n + p.alt_m) * cos_lat * sin_lon,
        z: (n * (1.0 - WGS84_E2) + p.alt_m) * sin_lat,
    }
}

/// Iterative inverse; converges to sub-micrometer accuracy within a few
/// iterations for terrestrial points.
pub fn ecef_to_geodetic(e: Ecef) -> Geodetic {
    let lon = e.y.atan2(e.x);
    let p = e.x.hypot(e.y);
    let mut lat = e.z.atan2(p * (1.0 - WGS84_E2));
    for _ in 0..10 {
        let sin_lat = lat.sin();
        let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
        let next = (e.z + WGS84_E2 * n * sin_lat).atan2(p);
        if (next - lat).abs() < 1e-15 {
            lat = next;
            break;
        }
        lat = next;
    }
    // well conditioned at every latitude, unlike p / cos(lat) - n
    let (sin_lat, cos_lat) = lat.sin_cos();
    let alt = p * cos_lat + e.z * sin_lat - WGS84_A * (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    Geodetic {
        lat_deg: lat.to_degrees(),
        lon_deg: lon.to_degrees(),
        alt_m: alt,
    }
}

fn rotation(origin: Geodetic) -> (f64, f64, f64, f64) {
    let (sin_lat, cos_lat) = origin.lat_deg.to_radians().sin_cos();
    let (sin_lon, cos_lon) = origin.lon_deg.to_radians().sin_cos();
    (sin_lat, cos_lat, sin_lon, cos_lon)
}

pub fn ecef_to_enu(point: Ecef, origin: Geodetic) -> Enu {
    let o = geodetic_to_ecef(origin);
    let (dx, dy, dz) = (point.x - o.x, point.y - o.y, point.z - o.z);
    let (sin_lat, cos_lat, sin_lon, cos_lon) = rotation(origin);
    Enu {
        east: -sin_lon * dx + cos_lon * dy,
        north: -sin_lat * cos_lon * dx - sin_lat * sin_lon * dy + cos_lat * dz,
        up: cos_lat * cos_lon * dx + cos_lat * sin_lon * dy + sin_lat * dz,
    }
}

pub fn enu_to_ecef(enu: Enu, origin: Geodetic) -> Ecef {
    let o = geodetic_to_ecef(origin);
    let (sin_lat, cos_lat, sin_lon, cos_lon) = rotation(origin);
    Ecef {
        x: o.x - sin_lon * enu.east - sin_lat * cos_lon * enu.north + cos_lat * cos_lon * enu.up,
        y: o.y + cos_lon * enu.east - sin_lat * sin_lon * enu.north + cos_lat * sin_lon * enu.up,
        z: o.z + cos_lat * enu.north + sin_lat * enu.up,
    }
}

pub fn geodetic_to_enu(point: Geodetic, origin: Geodetic) -> Enu {
    ecef_to_enu(geodetic_to_ecef(point), origin)
}

pub fn enu_to_geodetic(enu: Enu, origin: Geodetic) -> Geodetic {
    ecef_to_geodetic(enu_to_ecef(enu, origin))
}
