//! Normalized base-2 encoding (NB2E), fixed Fourier encoding (FFE) and the
//! normalization limits that make a bit vector trainable.
//!
//! An NB2E vector holds the first `N` digits of the binary expansion of a
//! normalized value `x'` in `[0, 1)`, most significant digit first, so that
//! `x' ≈ Σ B_i · 2^-i`. Bit `i` toggles with period `2^-(i-1)` in `x'`, the
//! same frequency `2^(i-1)` carried by the `i`-th sine/cosine pair of FFE.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Largest supported code length.
pub const MAX_BITS: usize = 64;

/// Code length used throughout the experiments.
pub const DEFAULT_BITS: usize = 48;

/// Soft guideline for the upper end of the training domain.
pub const TRAIN_MAX_GUIDELINE: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodingError {
    #[error("value {0} is outside the normalized domain [0, 1)")]
    OutOfDomain(f64),
    #[error("bit count {0} is outside 1..={MAX_BITS}")]
    BitCount(usize),
    #[error("frequency count must be at least 1")]
    FrequencyCount,
    #[error("bit vector element {index} is {value}, expected 0 or 1")]
    NotBinary { index: usize, value: u8 },
    #[error("raw value {0} is negative or not finite")]
    RawValue(f64),
    #[error("normalizer z = {z} must be positive and exceed the data maximum {data_max}")]
    DivisorTooSmall { z: f64, data_max: f64 },
    #[error("normalizer z = {z} must stay below 2 x data maximum = {limit}")]
    DivisorTooLarge { z: f64, limit: f64 },
    #[error("cannot normalize an empty array")]
    Empty,
}

fn check_unit(x: f64) -> Result<(), EncodingError> {
    if (0.0..1.0).contains(&x) {
        Ok(())
    } else {
        Err(EncodingError::OutOfDomain(x))
    }
}

fn check_bits(n_bits: usize) -> Result<(), EncodingError> {
    if (1..=MAX_BITS).contains(&n_bits) {
        Ok(())
    } else {
        Err(EncodingError::BitCount(n_bits))
    }
}

/// Binary code of one normalized value. `bits()[0]` is `B_1` (weight 1/2).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BitVector {
    bits: Vec<u8>,
}

impl BitVector {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self, EncodingError> {
        check_bits(bits.len())?;
        if let Some((index, &value)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(EncodingError::NotBinary { index, value });
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn n_bits(&self) -> usize {
        self.bits.len()
    }

    /// Bit `B_position` with 1-based indexing, as in the encoding formula.
    pub fn bit(&self, position: usize) -> Option<u8> {
        position.checked_sub(1).and_then(|i| self.bits.get(i).copied())
    }

    pub fn decode(&self) -> f64 {
        decode_nb2e(self)
    }

    /// Writes the bits as `0.0`/`1.0` network inputs.
    pub fn write_inputs(&self, out: &mut [f64]) {
        for (o, &b) in out.iter_mut().zip(&self.bits) {
            *o = f64::from(b);
        }
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Truncating binary expansion of `x_prime` to `n_bits` digits.
///
/// Doubling and subtracting one are exact in binary floating point, so the
/// digits are those of the exact value of `x_prime`.
pub fn encode_nb2e(x_prime: f64, n_bits: usize) -> Result<BitVector, EncodingError> {
    check_unit(x_prime)?;
    check_bits(n_bits)?;
    let mut bits = Vec::with_capacity(n_bits);
    let mut rest = x_prime;
    for _ in 0..n_bits {
        rest *= 2.0;
        if rest >= 1.0 {
            bits.push(1);
            rest -= 1.0;
        } else {
            bits.push(0);
        }
    }
    Ok(BitVector { bits })
}

/// Same digits as [`encode_nb2e`], written straight into an input row.
pub fn encode_nb2e_into(x_prime: f64, out: &mut [f64]) -> Result<(), EncodingError> {
    check_unit(x_prime)?;
    check_bits(out.len())?;
    let mut rest = x_prime;
    for o in out.iter_mut() {
        rest *= 2.0;
        if rest >= 1.0 {
            *o = 1.0;
            rest -= 1.0;
        } else {
            *o = 0.0;
        }
    }
    Ok(())
}

pub fn decode_nb2e(b: &BitVector) -> f64 {
    let mut weight = 0.5;
    let mut sum = 0.0;
    for &bit in &b.bits {
        if bit == 1 {
            sum += weight;
        }
        weight *= 0.5;
    }
    sum
}

/// Sine/cosine features at frequencies `2^(i-1)`, `i = 1..=n_freqs`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFeatures {
    values: Vec<f64>,
}

impl FourierFeatures {
    /// Interleaved `[sin_1, cos_1, sin_2, cos_2, ...]`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_freqs(&self) -> usize {
        self.values.len() / 2
    }

    /// `(sin, cos)` for frequency index `i` (1-based).
    pub fn pair(&self, i: usize) -> Option<(f64, f64)> {
        let k = i.checked_sub(1)? * 2;
        Some((*self.values.get(k)?, *self.values.get(k + 1)?))
    }
}

pub fn encode_ffe(x_prime: f64, n_freqs: usize) -> Result<FourierFeatures, EncodingError> {
    if n_freqs == 0 {
        return Err(EncodingError::FrequencyCount);
    }
    let mut values = alloc::vec![0.0; 2 * n_freqs];
    encode_ffe_into(x_prime, &mut values)?;
    Ok(FourierFeatures { values })
}

/// Writes `n = out.len() / 2` sine/cosine pairs into `out`.
pub fn encode_ffe_into(x_prime: f64, out: &mut [f64]) -> Result<(), EncodingError> {
    check_unit(x_prime)?;
    if out.len() < 2 {
        return Err(EncodingError::FrequencyCount);
    }
    // Cycles completed at frequency 2^(i-1) is x' * 2^(i-1); scaling by two
    // and dropping the integer part are exact, so the phase stays accurate
    // even at frequencies far above 2^53.
    let mut cycles = x_prime;
    for pair in out.chunks_exact_mut(2) {
        let angle = 2.0 * core::f64::consts::PI * cycles;
        pair[0] = libm::sin(angle);
        pair[1] = libm::cos(angle);
        cycles *= 2.0;
        cycles -= libm::floor(cycles);
    }
    Ok(())
}

/// Divisor mapping raw inputs into `[0, 1)`; `x = x' * z`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Normalizer {
    pub z: f64,
    pub data_max: f64,
}

impl Normalizer {
    /// Checks `max < z < 2 max`. An all-zero dataset accepts any positive `z`.
    pub fn new(z: f64, data_max: f64) -> Result<Self, EncodingError> {
        if !(data_max.is_finite() && data_max >= 0.0) {
            return Err(EncodingError::RawValue(data_max));
        }
        if !(z.is_finite() && z > 0.0 && z > data_max) {
            return Err(EncodingError::DivisorTooSmall { z, data_max });
        }
        if data_max > 0.0 && z >= 2.0 * data_max {
            return Err(EncodingError::DivisorTooLarge {
                z,
                limit: 2.0 * data_max,
            });
        }
        Ok(Self { z, data_max })
    }

    pub fn apply(&self, raw: f64) -> f64 {
        raw / self.z
    }

    pub fn invert(&self, x_prime: f64) -> f64 {
        x_prime * self.z
    }

    /// Largest normalized value of the data it was built from.
    pub fn max_normalized(&self) -> f64 {
        self.data_max / self.z
    }
}

pub fn normalize(raw: &[f64], z: f64) -> Result<(Vec<f64>, Normalizer), EncodingError> {
    if raw.is_empty() {
        return Err(EncodingError::Empty);
    }
    let mut data_max = 0.0_f64;
    for &r in raw {
        if !(r.is_finite() && r >= 0.0) {
            return Err(EncodingError::RawValue(r));
        }
        data_max = data_max.max(r);
    }
    let normalizer = Normalizer::new(z, data_max)?;
    let scaled = raw.iter().map(|&r| normalizer.apply(r)).collect();
    Ok((scaled, normalizer))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DomainStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DomainIssue {
    /// Training never reaches 0.5, so bit 1 is never set.
    FirstBitUntrained,
    TrainOverlapsTest,
    EmptyTestRange,
    TestReachesOne,
    OutOfUnitInterval,
    BelowGuideline,
}

impl DomainIssue {
    pub fn is_fatal(self) -> bool {
        !matches!(self, DomainIssue::BelowGuideline)
    }
}

impl fmt::Display for DomainIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            DomainIssue::FirstBitUntrained => "first bit untrained: max(X'_train) must exceed 0.5",
            DomainIssue::TrainOverlapsTest => "training range reaches into the test range",
            DomainIssue::EmptyTestRange => "test range is empty",
            DomainIssue::TestReachesOne => "test range must stay below 1",
            DomainIssue::OutOfUnitInterval => "values must lie in [0, 1)",
            DomainIssue::BelowGuideline => "max(X'_train) is below the 0.7 guideline",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainReport {
    pub status: DomainStatus,
    pub issues: Vec<DomainIssue>,
}

/// Checks `0.5 < max(train) < min(test) < max(test) < 1` and the 0.7 guideline.
pub fn check_train_domain(x_train_max: f64, x_test_min: f64, x_test_max: f64) -> DomainReport {
    let mut issues = Vec::new();
    let in_unit = |v: f64| (0.0..1.0).contains(&v);
    if !(in_unit(x_train_max) && in_unit(x_test_min) && in_unit(x_test_max)) {
        issues.push(DomainIssue::OutOfUnitInterval);
    }
    if x_train_max <= 0.5 {
        issues.push(DomainIssue::FirstBitUntrained);
    }
    if x_train_max >= x_test_min {
        issues.push(DomainIssue::TrainOverlapsTest);
    }
    if x_test_min >= x_test_max {
        issues.push(DomainIssue::EmptyTestRange);
    }
    if x_test_max >= 1.0 {
        issues.push(DomainIssue::TestReachesOne);
    }
    if x_train_max < TRAIN_MAX_GUIDELINE {
        issues.push(DomainIssue::BelowGuideline);
    }
    let status = if issues.iter().any(|i| i.is_fatal()) {
        DomainStatus::Fail
    } else if issues.is_empty() {
        DomainStatus::Pass
    } else {
        DomainStatus::Warn
    };
    DomainReport { status, issues }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_and_half() {
        let zero = encode_nb2e(0.0, 48).unwrap();
        assert_eq!(zero.n_bits(), 48);
        assert!(zero.bits().iter().all(|&b| b == 0));
        let half = encode_nb2e(0.5, 48).unwrap();
        assert_eq!(half.bits()[0], 1);
        assert!(half.bits()[1..].iter().all(|&b| b == 0));
    }

    #[test]
    fn decode_small_cases() {
        assert_eq!(decode_nb2e(&BitVector::from_bits(vec![0; 48]).unwrap()), 0.0);
        assert_eq!(decode_nb2e(&BitVector::from_bits(vec![1, 1]).unwrap()), 0.75);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(encode_nb2e(1.0, 8), Err(EncodingError::OutOfDomain(1.0)));
        assert_eq!(encode_nb2e(-0.1, 8), Err(EncodingError::OutOfDomain(-0.1)));
        assert!(encode_nb2e(f64::NAN, 8).is_err());
        assert_eq!(encode_nb2e(0.3, 0), Err(EncodingError::BitCount(0)));
        assert_eq!(encode_nb2e(0.3, 65), Err(EncodingError::BitCount(65)));
        assert!(matches!(
            BitVector::from_bits(vec![0, 2]),
            Err(EncodingError::NotBinary { index: 1, value: 2 })
        ));
        assert_eq!(encode_ffe(0.2, 0), Err(EncodingError::FrequencyCount));
        assert!(encode_ffe(1.5, 2).is_err());
    }

    #[test]
    fn bit_boundary_at_half() {
        // 0.5 - 2^-n rounds to 0.5 in f64 once n > 53.
        for n in [8, 32, 48, 53] {
            let eps = libm::ldexp(1.0, -(n as i32));
            assert_eq!(encode_nb2e(0.5 - eps, n).unwrap().bit(1), Some(0));
            assert_eq!(encode_nb2e(0.5, n).unwrap().bit(1), Some(1));
        }
    }

    #[test]
    fn into_matches_owned() {
        let mut row = [9.0; 16];
        encode_nb2e_into(0.7123, &mut row).unwrap();
        let owned = encode_nb2e(0.7123, 16).unwrap();
        let mut expect = [0.0; 16];
        owned.write_inputs(&mut expect);
        assert_eq!(row, expect);
    }

    #[test]
    fn ffe_small_cases() {
        assert_eq!(encode_ffe(0.0, 2).unwrap().values(), &[0.0, 1.0, 0.0, 1.0]);
        let quarter = encode_ffe(0.25, 1).unwrap();
        assert!((quarter.values()[0] - 1.0).abs() < 1e-15);
        assert!(quarter.values()[1].abs() < 1e-15);
    }

    #[test]
    fn normalize_limits() {
        let raw = [0.0, 35.0, 70.0, 100.0];
        let z = 100.0 / 0.7;
        let (scaled, n) = normalize(&raw, z).unwrap();
        assert!((scaled[3] - 0.7).abs() < 1e-15);
        assert!((n.invert(scaled[2]) - 70.0).abs() < 1e-12);

        let (zero, _) = normalize(&[0.0], 3.0).unwrap();
        assert_eq!(zero, vec![0.0]);

        let ten_years = [0.0, 2.5, 10.0];
        let (scaled, n) = normalize(&ten_years, 12.0).unwrap();
        assert!((n.max_normalized() - 5.0 / 6.0).abs() < 1e-15);
        assert!((scaled[2] - 5.0 / 6.0).abs() < 1e-15);

        assert!(matches!(normalize(&raw, 200.0), Err(EncodingError::DivisorTooLarge { .. })));
        assert!(matches!(normalize(&raw, 100.0), Err(EncodingError::DivisorTooSmall { .. })));
        assert!(matches!(normalize(&[-1.0, 2.0], 3.0), Err(EncodingError::RawValue(_))));
        assert_eq!(normalize(&[], 1.0), Err(EncodingError::Empty));
    }

    #[test]
    fn domain_reports() {
        assert_eq!(check_train_domain(0.7, 0.7001, 0.999).status, DomainStatus::Pass);
        let fail = check_train_domain(0.4, 0.41, 0.9);
        assert_eq!(fail.status, DomainStatus::Fail);
        assert!(fail.issues.contains(&DomainIssue::FirstBitUntrained));
        let warn = check_train_domain(0.6, 0.61, 0.99);
        assert_eq!(warn.status, DomainStatus::Warn);
        assert_eq!(warn.issues, vec![DomainIssue::BelowGuideline]);
        assert_eq!(check_train_domain(0.7, 0.8, 1.0).status, DomainStatus::Fail);
        assert_eq!(check_train_domain(0.8, 0.7, 0.9).status, DomainStatus::Fail);
    }
}
