//! Spherical geometry on a sphere of radius 6371 km.

/// Mean Earth radius used for every distance in the crate.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Wraps any longitude into `[-180, 180)`.
pub fn canonical_lon(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

/// Haversine great-circle distance in kilometres.
pub fn great_circle_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    central_angle(a, b) * EARTH_RADIUS_KM
}

/// Central angle in radians between two `(lat, lon)` points (haversine).
pub fn central_angle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

pub type Vec3 = [f64; 3];

pub fn to_unit(lat: f64, lon: f64) -> Vec3 {
    let (phi, lam) = (lat.to_radians(), lon.to_radians());
    [phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin()]
}

/// `(lat, lon)` of a unit vector; longitude canonicalised to `[-180, 180)`.
pub fn from_unit(v: Vec3) -> (f64, f64) {
    let lat = v[2].atan2(v[0].hypot(v[1])).to_degrees();
    let lon = canonical_lon(v[1].atan2(v[0]).to_degrees());
    (lat, lon)
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// The shorter great-circle arc between two points, parameterised by the
/// travelled angle: `point(θ) = start·cos θ + dir·sin θ` for θ ∈ [0, angle].
#[derive(Debug, Clone, Copy)]
pub struct Arc {
    pub start: Vec3,
    pub dir: Vec3,
    pub angle: f64,
}

impl Arc {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Self {
        let start = to_unit(a.0, a.1);
        let end = to_unit(b.0, b.1);
        let angle = central_angle(a, b);
        let c = dot(start, end);
        let mut perp = [end[0] - c * start[0], end[1] - c * start[1], end[2] - c * start[2]];
        let mut n = norm(perp);
        if n < 1e-12 {
            // coincident or antipodal: any perpendicular works, prefer the
            // meridian direction through the start point
            perp = cross(cross(start, [0.0, 0.0, 1.0]), start);
            n = norm(perp);
            if n < 1e-12 {
                perp = [1.0, 0.0, 0.0];
                n = 1.0;
            }
        }
        let dir = [perp[0] / n, perp[1] / n, perp[2] / n];
        Self { start, dir, angle }
    }

    pub fn point(&self, theta: f64) -> Vec3 {
        let (s, c) = theta.sin_cos();
        [
            self.start[0] * c + self.dir[0] * s,
            self.start[1] * c + self.dir[1] * s,
            self.start[2] * c + self.dir[2] * s,
        ]
    }

    pub fn lat_lon(&self, theta: f64) -> (f64, f64) {
        from_unit(self.point(theta))
    }

    /// Angles θ ∈ [0, 2π) where `n · point(θ) = e`.
    pub fn level_crossings(&self, n: Vec3, e: f64) -> [Option<f64>; 2] {
        let c = dot(n, self.start);
        let d = dot(n, self.dir);
        let r = c.hypot(d);
        if r < 1e-15 || e.abs() > r {
            return [None, None];
        }
        let psi = d.atan2(c);
        let delta = (e / r).clamp(-1.0, 1.0).acos();
        let tau = std::f64::consts::TAU;
        [Some((psi + delta).rem_euclid(tau)), Some((psi - delta).rem_euclid(tau))]
    }
}
