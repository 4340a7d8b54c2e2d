//! Physical constants and dB helpers.

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;

pub const GHZ: f64 = 1e9;
pub const MHZ: f64 = 1e6;

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_lin(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    if mw > 0.0 {
        lin_to_db(mw)
    } else {
        f64::NEG_INFINITY
    }
}

/// Photon energy h·ν in joules at a vacuum wavelength in metres.
pub fn photon_energy(wavelength_m: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength_m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip() {
        for db in [-30.0, -3.0, 0.0, 3.0103, 17.3] {
            assert!((lin_to_db(db_to_lin(db)) - db).abs() < 1e-12);
        }
        assert_eq!(mw_to_dbm(0.0), f64::NEG_INFINITY);
    }
}
