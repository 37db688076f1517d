//! Bitstring text form: character `q` is qubit `q`, so qubit 0 is leftmost.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub fn format_bits(index: u64, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_bits(s: &str) -> Result<u64> {
    if s.len() > 64 {
        return Err(Error::Parse(format!("bitstring '{s}' is longer than 64")));
    }
    let mut v = 0u64;
    for (q, c) in s.chars().enumerate() {
        match c {
            '0' => {}
            '1' => v |= 1 << q,
            _ => return Err(Error::Parse(format!("bad bit '{c}' in '{s}'"))),
        }
    }
    Ok(v)
}

/// A computational basis state with its register width.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Bitstring {
    pub n_qubits: usize,
    pub bits: u64,
}

impl Bitstring {
    pub fn new(n_qubits: usize, bits: u64) -> Bitstring {
        Bitstring { n_qubits, bits }
    }

    pub fn zeros(n_qubits: usize) -> Bitstring {
        Bitstring { n_qubits, bits: 0 }
    }

    pub fn bit(&self, q: usize) -> bool {
        self.bits >> q & 1 == 1
    }

    pub fn ones(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|&q| self.bit(q)).collect()
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_bits(self.bits, self.n_qubits))
    }
}

impl fmt::Debug for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{self}>")
    }
}

impl std::str::FromStr for Bitstring {
    type Err = Error;
    fn from_str(s: &str) -> Result<Bitstring> {
        Ok(Bitstring {
            n_qubits: s.len(),
            bits: parse_bits(s)?,
        })
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qubit_zero_is_leftmost() {
        assert_eq!(format_bits(0b0001, 4), "1000");
        assert_eq!(parse_bits("0010").unwrap(), 0b0100);
        assert!(parse_bits("01a").is_err());
    }
}
