//! Complex amplitudes on product grids and the WFLD snapshot format.

use std::io::{Read, Write};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::fft::{Direction, NdFft};
use crate::grid::{strides, unravel, Grid1D};
use crate::reduce;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Position,
    Momentum,
}

/// A complex field over the product of `grids` (row-major, last axis fastest).
///
/// Momentum-space fields hold the unitary DFT of the position amplitudes in FFT
/// slot order, so both spaces share the same measure (the position cell volume)
/// and norms carry over unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grids: Vec<Grid1D>,
    amplitudes: Vec<C64>,
    space: Space,
}

impl WaveField {
    pub fn new(grids: Vec<Grid1D>, amplitudes: Vec<C64>, space: Space) -> Result<Self> {
        let n: usize = grids.iter().map(|g| g.n_points).product();
        if grids.is_empty() || n != amplitudes.len() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                n
            )));
        }
        Ok(Self { grids, amplitudes, space })
    }

    pub fn zeros(grids: Vec<Grid1D>, space: Space) -> Self {
        let n = grids.iter().map(|g| g.n_points).product();
        Self { grids, amplitudes: vec![C64::new(0.0, 0.0); n], space }
    }

    /// Sample `f(coords)` on the position grid.
    pub fn from_fn<F>(grids: Vec<Grid1D>, f: F) -> Self
    where
        F: Fn(&[f64]) -> C64 + Sync,
    {
        let shape: Vec<usize> = grids.iter().map(|g| g.n_points).collect();
        let n: usize = shape.iter().product();
        let axes: Vec<Vec<f64>> = grids.iter().map(|g| g.coordinates()).collect();
        let amplitudes = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![0usize; shape.len()], vec![0.0; shape.len()]),
                |(idx, x), flat| {
                    unravel(flat, &shape, idx);
                    for a in 0..shape.len() {
                        x[a] = axes[a][idx[a]];
                    }
                    f(x)
                },
            )
            .collect();
        Self { grids, amplitudes, space: Space::Position }
    }

    pub fn grids(&self) -> &[Grid1D] {
        &self.grids
    }

    pub fn shape(&self) -> Vec<usize> {
        self.grids.iter().map(|g| g.n_points).collect()
    }

    pub fn rank(&self) -> usize {
        self.grids.len()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn cell_volume(&self) -> f64 {
        self.grids.iter().map(|g| g.spacing()).product()
    }

    /// Σ |ψ|² · cell volume.
    pub fn norm_sqr(&self) -> f64 {
        reduce::norm_sqr(&self.amplitudes) * self.cell_volume()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain(format!("cannot normalize a field with norm {n}")));
        }
        Ok(self.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scaled(&self, s: C64) -> Self {
        let amplitudes = self.amplitudes.par_iter().map(|z| z * s).collect();
        Self { grids: self.grids.clone(), amplitudes, space: self.space }
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.space == other.space && self.grids == other.grids
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::Shape("fields differ in grids or space".into()))
        }
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        self.check_layout(other)?;
        let amplitudes =
            self.amplitudes.par_iter().zip(&other.amplitudes).map(|(x, y)| a * x + b * y).collect();
        Ok(Self { grids: self.grids.clone(), amplitudes, space: self.space })
    }

    /// Exchange the two particles: the first half of the axes is swapped with
    /// the second half, e.g. (x1, y1, x2, y2) -> (x2, y2, x1, y1).
    pub fn exchanged(&self) -> Result<Self> {
        let r = self.rank();
        if r % 2 != 0 || self.grids[..r / 2] != self.grids[r / 2..] {
            return Err(Error::Shape("exchange needs two identical single-particle grids".into()));
        }
        let half: usize = self.grids[..r / 2].iter().map(|g| g.n_points).product();
        let mut out = vec![C64::new(0.0, 0.0); self.len()];
        out.par_chunks_mut(half).enumerate().for_each(|(i, row)| {
            for (j, o) in row.iter_mut().enumerate() {
                *o = self.amplitudes[j * half + i];
            }
        });
        Ok(Self { grids: self.grids.clone(), amplitudes: out, space: self.space })
    }

    pub fn dft(&self, direction: Direction) -> Self {
        let fft = NdFft::new(&self.shape());
        let mut data = self.amplitudes.clone();
        fft.process(&mut data, direction);
        let space = match direction {
            Direction::Forward => Space::Momentum,
            Direction::Inverse => Space::Position,
        };
        Self { grids: self.grids.clone(), amplitudes: data, space }
    }

    /// Probability mass over the points where `pred(coords)` holds.
    pub fn mass_where<F>(&self, pred: F) -> f64
    where
        F: Fn(&[f64]) -> bool + Sync,
    {
        let shape = self.shape();
        let axes: Vec<Vec<f64>> = self.grids.iter().map(|g| g.coordinates()).collect();
        let chunks: Vec<f64> = self
            .amplitudes
            .par_chunks(reduce::CHUNK)
            .enumerate()
            .map(|(c, chunk)| {
                let mut idx = vec![0usize; shape.len()];
                let mut x = vec![0.0; shape.len()];
                let mut acc = 0.0;
                for (i, z) in chunk.iter().enumerate() {
                    unravel(c * reduce::CHUNK + i, &shape, &mut idx);
                    for a in 0..shape.len() {
                        x[a] = axes[a][idx[a]];
                    }
                    if pred(&x) {
                        acc += z.norm_sqr();
                    }
                }
                acc
            })
            .collect();
        chunks.iter().sum::<f64>() * self.cell_volume()
    }

    /// Flat offset of a multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        strides(&self.shape()).iter().zip(idx).map(|(s, i)| s * i).sum()
    }

    pub fn write_wfld<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(WFLD_MAGIC)?;
        w.write_all(&(self.rank() as u32).to_le_bytes())?;
        for g in &self.grids {
            w.write_all(&(g.n_points as u32).to_le_bytes())?;
            w.write_all(&g.extent.to_le_bytes())?;
        }
        w.write_all(&[match self.space {
            Space::Position => 0u8,
            Space::Momentum => 1u8,
        }])?;
        let mut buf = Vec::with_capacity(16 * self.len());
        for z in &self.amplitudes {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_wfld<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != WFLD_MAGIC {
            return Err(Error::Domain("not a WFLD snapshot".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let rank = u32::from_le_bytes(b4) as usize;
        let mut grids = Vec::with_capacity(rank);
        for _ in 0..rank {
            r.read_exact(&mut b4)?;
            r.read_exact(&mut b8)?;
            grids.push(Grid1D::new(u32::from_le_bytes(b4) as usize, f64::from_le_bytes(b8))?);
        }
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)?;
        let space = match tag[0] {
            0 => Space::Position,
            1 => Space::Momentum,
            t => return Err(Error::Domain(format!("unknown space tag {t}"))),
        };
        let n: usize = grids.iter().map(|g| g.n_points).product();
        let mut raw = vec![0u8; 16 * n];
        r.read_exact(&mut raw)?;
        let amplitudes = raw
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        Self::new(grids, amplitudes, space)
    }
}

pub const WFLD_MAGIC: &[u8; 5] = b"WFLD1";

/// ⟨a|b⟩ = Σ conj(a)·b · cell volume.
pub fn inner_product(a: &WaveField, b: &WaveField) -> Result<C64> {
    a.check_layout(b)?;
    Ok(reduce::dot(&a.amplitudes, &b.amplitudes) * a.cell_volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(seed: u64, shape: &[(usize, f64)]) -> WaveField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grids: Vec<Grid1D> = shape.iter().map(|&(n, l)| Grid1D::new(n, l).unwrap()).collect();
        let n: usize = shape.iter().map(|s| s.0).product();
        let amps = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        WaveField::new(grids, amps, Space::Position).unwrap()
    }

    #[test]
    fn normalize_halves_a_norm_four_field() {
        let g = Grid1D::new(4, 4.0).unwrap();
        let f = WaveField::new(vec![g], vec![C64::new(1.0, 0.0); 4], Space::Position).unwrap();
        let f = f.scaled(C64::new(2.0, 0.0));
        assert!((f.norm_sqr() - 16.0).abs() < 1e-15);
        let f = WaveField::new(vec![g], vec![C64::new(1.0, 0.0); 4], Space::Position).unwrap();
        assert!((f.norm_sqr() - 4.0).abs() < 1e-15);
        let n = f.normalize().unwrap();
        assert!((n.norm_sqr() - 1.0).abs() < 1e-15);
        for z in n.amplitudes() {
            assert!((z.re - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let f = random_field(3, &[(8, 2.0), (8, 3.0)]).normalize().unwrap();
        let g = f.normalize().unwrap();
        for (a, b) in f.amplitudes().iter().zip(g.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn normalize_random_field_by_direct_summation() {
        let f = random_field(7, &[(8, 1.5), (8, 2.5)]).normalize().unwrap();
        let mut direct = 0.0;
        for z in f.amplitudes() {
            direct += z.re * z.re + z.im * z.im;
        }
        direct *= (1.5 / 8.0) * (2.5 / 8.0);
        assert!((direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_is_a_domain_error() {
        let f = WaveField::zeros(vec![Grid1D::new(4, 1.0).unwrap()], Space::Position);
        assert!(matches!(f.normalize(), Err(Error::Domain(_))));
    }

    #[test]
    fn plane_waves_are_orthogonal() {
        let g = Grid1D::new(32, 10.0).unwrap();
        let k1 = 2.0 * PI * 2.0 / 10.0;
        let k2 = 2.0 * PI * 5.0 / 10.0;
        let a = WaveField::from_fn(vec![g], |x| C64::from_polar(1.0, k1 * x[0]));
        let b = WaveField::from_fn(vec![g], |x| C64::from_polar(1.0, k2 * x[0]));
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-12);
        let a = a.normalize().unwrap();
        assert!((inner_product(&a, &a).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn inner_product_matches_brute_force_loop() {
        let a = random_field(11, &[(6, 1.0), (5, 2.0)]);
        let b = random_field(12, &[(6, 1.0), (5, 2.0)]);
        let mut brute = C64::new(0.0, 0.0);
        for i in 0..30 {
            brute += a.amplitudes()[i].conj() * b.amplitudes()[i];
        }
        brute *= a.cell_volume();
        let fast = inner_product(&a, &b).unwrap();
        assert!((fast - brute).norm() / brute.norm() < 1e-12);
        let back = inner_product(&b, &a).unwrap();
        assert!((fast - back.conj()).norm() < 1e-13);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = random_field(1, &[(6, 1.0)]);
        let b = random_field(1, &[(6, 2.0)]);
        assert!(matches!(inner_product(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn constant_field_transforms_to_dc_delta() {
        let g = Grid1D::new(16, 4.0).unwrap();
        let f = WaveField::from_fn(vec![g, g], |_| C64::new(1.0, 0.0));
        let k = f.dft(Direction::Forward);
        assert_eq!(k.space(), Space::Momentum);
        assert!((k.amplitudes()[0] - C64::new(16.0, 0.0)).norm() < 1e-12);
        assert!(k.amplitudes()[1..].iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn single_mode_lands_in_slot_three() {
        let g = Grid1D::new(32, 7.0).unwrap();
        let k3 = g.wavenumber(3);
        let f = WaveField::from_fn(vec![g], |x| C64::from_polar(1.0, k3 * x[0]));
        let k = f.dft(Direction::Forward);
        for (i, z) in k.amplitudes().iter().enumerate() {
            if i == 3 {
                assert!((z.norm() - 32f64.sqrt()).abs() < 1e-12);
            } else {
                assert!(z.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dft_round_trip_and_parseval() {
        let f = random_field(5, &[(6, 1.0), (10, 2.0), (4, 1.0)]);
        let k = f.dft(Direction::Forward);
        assert!((k.norm_sqr() - f.norm_sqr()).abs() / f.norm_sqr() < 1e-12);
        let back = k.dft(Direction::Inverse);
        let dev = back.amplitudes().iter().zip(f.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);
    }

    #[test]
    fn exchange_is_an_involution() {
        let f = random_field(9, &[(3, 1.0), (4, 1.0), (3, 1.0), (4, 1.0)]);
        let e = f.exchanged().unwrap();
        assert_eq!(e.amplitudes()[f.offset(&[1, 2, 0, 3])], f.amplitudes()[f.offset(&[0, 3, 1, 2])]);
        assert_eq!(e.exchanged().unwrap(), f);
    }

    #[test]
    fn wfld_header_layout_is_fixed() {
        let g = Grid1D::new(2, 1.5).unwrap();
        let f = WaveField::new(vec![g], vec![C64::new(1.0, -2.0), C64::new(0.5, 0.25)], Space::Momentum).unwrap();
        let mut buf = Vec::new();
        f.write_wfld(&mut buf).unwrap();
        let mut expected = b"WFLD1".to_vec();
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1.5f64.to_le_bytes());
        expected.push(1);
        for v in [1.0f64, -2.0, 0.5, 0.25] {
            expected.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(buf, expected);
        assert_eq!(WaveField::read_wfld(&buf[..]).unwrap(), f);
    }

    proptest::proptest! {
        #[test]
        fn inner_product_is_sesquilinear(seed in 0u64..1000, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let a = random_field(seed, &[(5, 1.0), (6, 1.3)]);
            let b = random_field(seed + 1, &[(5, 1.0), (6, 1.3)]);
            let c = random_field(seed + 2, &[(5, 1.0), (6, 1.3)]);
            let alpha = C64::new(re, im);
            let lhs = inner_product(&a, &b.combine(alpha, &c, C64::new(1.0, 0.0)).unwrap()).unwrap();
            let rhs = alpha * inner_product(&a, &b).unwrap() + inner_product(&a, &c).unwrap();
            proptest::prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn wfld_round_trips(seed in 0u64..1000) {
            let f = random_field(seed, &[(3, 0.7), (4, 2.0)]);
            let mut buf = Vec::new();
            f.write_wfld(&mut buf).unwrap();
            proptest::prop_assert_eq!(WaveField::read_wfld(&buf[..]).unwrap(), f);
        }
    }
}
