//! FFT-based periodograms over the AoA, AoD and delay domains.
//!
//! The receive axis uses a forward transform, the transmit and subcarrier
//! axes unnormalized inverse transforms. The half-band index shift on the
//! two antenna axes is folded in by modulating the input with `(-1)^n`,
//! which keeps the transform exact for odd lengths too.

use ndarray::{Array, Array1, Array2, Array3, Axis, Dimension};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::channel::ChannelTensor;

/// A real non-negative spectrum `|F|^2` over one, two or three domains.
#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram<D: Dimension> {
    values: Array<f64, D>,
}

impl<D: Dimension> Periodogram<D> {
    pub fn values(&self) -> &Array<f64, D> {
        &self.values
    }

    pub fn into_values(self) -> Array<f64, D> {
        self.values
    }

    /// Index of the largest value; ties resolve to the first in logical order.
    pub fn argmax(&self) -> Option<D::Pattern> {
        let mut best: Option<(D::Pattern, f64)> = None;
        for (idx, &v) in self.values.indexed_iter() {
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((idx, v));
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub type Periodogram1 = Periodogram<ndarray::Ix1>;
pub type Periodogram2 = Periodogram<ndarray::Ix2>;
pub type Periodogram3 = Periodogram<ndarray::Ix3>;

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Inverse,
}

fn transform_axis(
    data: &mut Array3<Complex64>,
    axis: usize,
    dir: Direction,
    half_shift: bool,
    planner: &mut FftPlanner<f64>,
) {
    let n = data.len_of(Axis(axis));
    let fft = match dir {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for mut lane in data.lanes_mut(Axis(axis)) {
        for (k, (b, v)) in buf.iter_mut().zip(lane.iter()).enumerate() {
            *b = if half_shift && k % 2 == 1 { -*v } else { *v };
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for (dst, src) in lane.iter_mut().zip(&buf) {
            *dst = *src;
        }
    }
}

/// `F_r(H)`: the receive-axis transform, indexed `[i_phi, n_t, n_c]`.
pub fn rx_transform(h: &ChannelTensor) -> Array3<Complex64> {
    let mut planner = FftPlanner::new();
    let mut data = h.data().clone();
    transform_axis(&mut data, 0, Direction::Forward, true, &mut planner);
    data
}

/// `F = F_c^-1 . F_t^-1 . F_r (H)`, indexed `[i_phi, i_varphi, i_tau]`.
pub fn full_transform(h: &ChannelTensor) -> Array3<Complex64> {
    let mut planner = FftPlanner::new();
    let mut data = h.data().clone();
    transform_axis(&mut data, 0, Direction::Forward, true, &mut planner);
    transform_axis(&mut data, 1, Direction::Inverse, true, &mut planner);
    transform_axis(&mut data, 2, Direction::Inverse, false, &mut planner);
    data
}

/// Periodogram over the joint AoA / AoD / delay domain.
pub fn periodogram_3d(h: &ChannelTensor) -> Periodogram3 {
    Periodogram {
        values: full_transform(h).mapv(|z| z.norm_sqr()),
    }
}

/// AoA periodogram: power of `F_r(H)` averaged over transmit antennas and
/// subcarriers.
pub fn aoa_periodogram(h: &ChannelTensor) -> Periodogram1 {
    aoa_periodogram_from(&rx_transform(h))
}

pub(crate) fn aoa_periodogram_from(fr: &Array3<Complex64>) -> Periodogram1 {
    let (nr, nt, nc) = fr.dim();
    let norm = (nt * nc) as f64;
    let values = Array1::from_shape_fn(nr, |i| {
        fr.index_axis(Axis(0), i)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            / norm
    });
    Periodogram { values }
}

/// AoA-AoD periodogram, averaged over subcarriers.
pub fn aoa_aod_periodogram(h: &ChannelTensor) -> Periodogram2 {
    let mut planner = FftPlanner::new();
    let mut data = h.data().clone();
    transform_axis(&mut data, 0, Direction::Forward, true, &mut planner);
    transform_axis(&mut data, 1, Direction::Inverse, true, &mut planner);
    let nc = data.len_of(Axis(2)) as f64;
    let values: Array2<f64> = data.mapv(|z| z.norm_sqr()).sum_axis(Axis(2)) / nc;
    Periodogram { values }
}

/// AoA-delay periodogram, averaged over transmit antennas.
pub fn aoa_delay_periodogram(h: &ChannelTensor) -> Periodogram2 {
    let mut planner = FftPlanner::new();
    let mut data = h.data().clone();
    transform_axis(&mut data, 0, Direction::Forward, true, &mut planner);
    transform_axis(&mut data, 2, Direction::Inverse, false, &mut planner);
    let nt = data.len_of(Axis(1)) as f64;
    let values: Array2<f64> = data.mapv(|z| z.norm_sqr()).sum_axis(Axis(1)) / nt;
    Periodogram { values }
}

/// For every detected row, the column holding the row maximum (lowest index
/// on ties).
pub fn rowwise_peak(
    s: &Periodogram2,
    rows: impl IntoIterator<Item = usize>,
) -> Vec<(usize, usize)> {
    rows.into_iter()
        .map(|r| {
            let row = s.values.index_axis(Axis(0), r);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            (r, best)
        })
        .collect()
}

/// Write a 1-D or 2-D periodogram as CSV rows of bin indices followed by the value.
pub fn write_periodogram_csv<D: Dimension, W: std::io::Write>(
    s: &Periodogram<D>,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ndim = s.values.ndim();
    let mut header: Vec<String> = (0..ndim).map(|d| format!("i{d}")).collect();
    header.push("value".into());
    w.write_record(&header)?;
    for (idx, v) in s.values.view().into_dyn().indexed_iter() {
        let mut rec: Vec<String> = idx.slice().iter().map(|i| i.to_string()).collect();
        rec.push(v.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::SystemConfig;

    #[test]
    fn zero_tensor_zero_spectrum() {
        let sys = SystemConfig::new(28e9, 1e9, 8, 4, 4);
        let h = ChannelTensor::zeros(&sys);
        assert!(periodogram_3d(&h).values().iter().all(|&v| v == 0.0));
        assert!(aoa_periodogram(&h).values().iter().all(|&v| v == 0.0));
        assert!(aoa_aod_periodogram(&h).values().iter().all(|&v| v == 0.0));
        assert!(aoa_delay_periodogram(&h).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rowwise_peak_ties_and_increasing() {
        let s = Periodogram {
            values: ndarray::arr2(&[[1.0, 2.0, 3.0, 4.0], [5.0, 1.0, 5.0, 0.0]]),
        };
        assert_eq!(rowwise_peak(&s, [0, 1]), vec![(0, 3), (1, 0)]);
    }
}
