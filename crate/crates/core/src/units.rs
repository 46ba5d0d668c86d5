//! dB conversions. Power ratios use `10^(x/10)`; amplitudes take the square
//! root of the linear power factor.

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[inline]
pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts) + 30.0
}

#[inline]
pub fn dbw_to_watts(dbw: f64) -> f64 {
    db_to_linear(dbw)
}
