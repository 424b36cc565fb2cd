//! MIMO-OFDM channel tensor synthesis, AWGN and Hamming windowing.

use std::f64::consts::PI;
use std::io::{Read, Write};

use ndarray::{Array1, Array3, Zip};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::raytrace::PathRecord;
use crate::scene::SystemConfig;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("channel has zero mean power, SNR is undefined")]
    AllZeroChannel,
    #[error("channel contains non-finite entries")]
    NonFinite,
    #[error("tensor file: {0}")]
    Io(#[from] std::io::Error),
    #[error("tensor file: {0}")]
    Format(String),
}

/// Channel response indexed `[rx antenna, tx antenna, subcarrier]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    data: Array3<Complex64>,
    system: SystemConfig,
}

impl ChannelTensor {
    pub fn zeros(system: &SystemConfig) -> Self {
        Self {
            data: Array3::zeros((system.num_rx, system.num_tx, system.num_subcarriers)),
            system: *system,
        }
    }

    /// Wrap raw data; the shape must be `(Nr, Nt, Nc)` of `system`.
    pub fn from_array(data: Array3<Complex64>, system: &SystemConfig) -> Option<Self> {
        let shape = (system.num_rx, system.num_tx, system.num_subcarriers);
        (data.dim() == shape).then(|| Self {
            data,
            system: *system,
        })
    }

    pub fn data(&self) -> &Array3<Complex64> {
        &self.data
    }

    pub fn system(&self) -> &SystemConfig {
        &self.system
    }

    pub fn mean_power(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Add for &ChannelTensor {
    type Output = ChannelTensor;

    fn add(self, rhs: &ChannelTensor) -> ChannelTensor {
        ChannelTensor {
            data: &self.data + &rhs.data,
            system: self.system,
        }
    }
}

/// `exp(-j 2 pi x)` with `x` reduced modulo one first to keep the phase
/// accurate for large cycle counts.
fn cis_neg(x: f64) -> Complex64 {
    let frac = x - x.floor();
    Complex64::from_polar(1.0, -2.0 * PI * frac)
}

/// Sum of plane-wave path contributions over every antenna pair and subcarrier.
pub fn synthesize(paths: &[PathRecord], system: &SystemConfig) -> ChannelTensor {
    let (nr, nt, nc) = (system.num_rx, system.num_tx, system.num_subcarriers);
    let df = system.subcarrier_spacing();
    let ratio = system.spacing_ratio();
    let f_low = system.carrier_frequency - nc as f64 / 2.0 * df;

    let mut h = ChannelTensor::zeros(system);
    let mut tx_sc = Array1::<Complex64>::zeros(nt * nc);
    for p in paths {
        let common = p.beta * cis_neg(f_low * p.tau);
        let sc: Vec<Complex64> = (0..nc).map(|c| cis_neg(c as f64 * df * p.tau)).collect();
        let sin_aod = p.aod.sin();
        for t in 0..nt {
            let tx = common * cis_neg(t as f64 * ratio * sin_aod);
            for c in 0..nc {
                tx_sc[t * nc + c] = tx * sc[c];
            }
        }
        let sin_aoa = p.aoa.sin();
        for r in 0..nr {
            let rx = cis_neg(-(r as f64) * ratio * sin_aoa);
            let mut plane = h.data.index_axis_mut(ndarray::Axis(0), r);
            for (dst, src) in plane.iter_mut().zip(tx_sc.iter()) {
                *dst += rx * src;
            }
        }
    }
    h
}

/// Signal-to-noise ratio in dB; `+inf` disables noise.
pub const NOISELESS: f64 = f64::INFINITY;

/// Add circular complex Gaussian noise with variance
/// `mean(|H|^2) * 10^(-snr_db / 10)` per element.
pub fn add_noise(h: &ChannelTensor, snr_db: f64, seed: u64) -> Result<ChannelTensor, ChannelError> {
    if !h.is_finite() {
        return Err(ChannelError::NonFinite);
    }
    if snr_db == f64::INFINITY {
        return Ok(h.clone());
    }
    let power = h.mean_power();
    if power <= 0.0 {
        return Err(ChannelError::AllZeroChannel);
    }
    let variance = power * 10f64.powf(-snr_db / 10.0);
    let scale = (variance / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = h.clone();
    for z in out.data.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z += Complex64::new(re * scale, im * scale);
    }
    Ok(out)
}

/// Hamming taper `0.54 - 0.46 cos(2 pi n / (N - 1))`.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| 0.54 - 0.46 * (2.0 * PI * k as f64 / (n as f64 - 1.0)).cos())
        .collect()
}

/// Separable 3-D window `w[r,t,c] = wr[r] * wt[t] * wc[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window3D {
    pub rx: Vec<f64>,
    pub tx: Vec<f64>,
    pub subcarrier: Vec<f64>,
}

impl Window3D {
    pub fn hamming(system: &SystemConfig) -> Self {
        Self {
            rx: hamming(system.num_rx),
            tx: hamming(system.num_tx),
            subcarrier: hamming(system.num_subcarriers),
        }
    }

    pub fn at(&self, r: usize, t: usize, c: usize) -> f64 {
        self.rx[r] * self.tx[t] * self.subcarrier[c]
    }
}

/// A channel tensor that has already been tapered. Kept as its own type so
/// the window cannot be applied twice.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedChannel(ChannelTensor);

impl WindowedChannel {
    pub fn tensor(&self) -> &ChannelTensor {
        &self.0
    }
}

pub fn apply_window(h: &ChannelTensor) -> WindowedChannel {
    let w = Window3D::hamming(&h.system);
    let mut out = h.clone();
    Zip::indexed(&mut out.data).for_each(|(r, t, c), z| *z *= w.at(r, t, c));
    WindowedChannel(out)
}

/// Taper only the receive-antenna axis.
pub fn apply_rx_window(h: &ChannelTensor) -> ChannelTensor {
    let wr = hamming(h.system.num_rx);
    let mut out = h.clone();
    Zip::indexed(&mut out.data).for_each(|(r, _, _), z| *z *= wr[r]);
    out
}

/// Dump a tensor: an 8-byte header (`u16` Nr, `u16` Nt, `u32` Nc, all
/// little-endian) followed by little-endian `complex64` values (`f32` real,
/// `f32` imaginary) in `(nr, nt, nc)` row-major order.
pub fn write_tensor<W: Write>(h: &ChannelTensor, mut out: W) -> Result<(), ChannelError> {
    let (nr, nt, nc) = h.data.dim();
    let too_big = || ChannelError::Format("dimension does not fit the header".into());
    out.write_all(&u16::try_from(nr).map_err(|_| too_big())?.to_le_bytes())?;
    out.write_all(&u16::try_from(nt).map_err(|_| too_big())?.to_le_bytes())?;
    out.write_all(&u32::try_from(nc).map_err(|_| too_big())?.to_le_bytes())?;
    let mut buf = Vec::with_capacity(h.data.len() * 8);
    for z in h.data.iter() {
        buf.extend_from_slice(&(z.re as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

/// Read a tensor written by [`write_tensor`]; returns the raw array.
pub fn read_tensor<R: Read>(mut input: R) -> Result<Array3<Complex64>, ChannelError> {
    let mut header = [0u8; 8];
    input.read_exact(&mut header)?;
    let nr = u16::from_le_bytes([header[0], header[1]]) as usize;
    let nt = u16::from_le_bytes([header[2], header[3]]) as usize;
    let nc = u32::from_le_bytes([header[4], header[5], header[6], header[7]]) as usize;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != nr * nt * nc * 8 {
        return Err(ChannelError::Format(format!(
            "expected {} payload bytes, found {}",
            nr * nt * nc * 8,
            body.len()
        )));
    }
    let values: Vec<Complex64> = body
        .chunks_exact(8)
        .map(|b| {
            let re = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            let im = f32::from_le_bytes([b[4], b[5], b[6], b[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Array3::from_shape_vec((nr, nt, nc), values).map_err(|e| ChannelError::Format(e.to_string()))
}
