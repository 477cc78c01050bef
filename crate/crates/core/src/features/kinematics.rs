//! Forward-difference angular velocity and acceleration over projected
//! component series.

use super::FeatureError;

/// Forward differences of a timestamped vector series.
///
/// `vel[t] = (x[t+1] - x[t]) / dt` in per-second units; acceleration is the
/// forward difference of the velocity series. Timestamps must be strictly
/// increasing.
pub fn angular_kinematics(
    series: &[(i64, Vec<f64>)],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), FeatureError> {
    if series.len() < 2 {
        return Err(FeatureError::TooFewFrames {
            needed: 2,
            got: series.len(),
        });
    }
    let velocity = diff(series)?;
    let acceleration = if velocity.len() >= 2 {
        // Velocity sample t lives on the interval starting at timestamp t.
        let vel_series: Vec<(i64, Vec<f64>)> = velocity
            .iter()
            .enumerate()
            .map(|(i, v)| (series[i].0, v.clone()))
            .collect();
        diff(&vel_series)?
    } else {
        Vec::new()
    };
    Ok((velocity, acceleration))
}

fn diff(series: &[(i64, Vec<f64>)]) -> Result<Vec<Vec<f64>>, FeatureError> {
    let mut out = Vec::with_capacity(series.len() - 1);
    for w in series.windows(2) {
        let dt_ms = w[1].0 - w[0].0;
        if dt_ms <= 0 {
            return Err(FeatureError::ZeroDt {
                timestamp_ms: w[1].0,
            });
        }
        let dt_s = dt_ms as f64 / 1000.0;
        out.push(
            w[1].1
                .iter()
                .zip(&w[0].1)
                .map(|(b, a)| (b - a) / dt_s)
                .collect(),
        );
    }
    Ok(out)
}
