use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::program::{Program, INT_REGS};
use super::vm::MachineState;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BindingError {
    #[error("secret region is empty")]
    EmptySecret,
    #[error("secret element width {0} is invalid (must be 1..=8 and divide the region length)")]
    BadWidth(usize),
    #[error("{what} [{start}, {end}) lies outside memory of {size} bytes")]
    OutOfBounds { what: &'static str, start: u64, end: u64, size: usize },
    #[error("public write [{start}, {end}) overlaps the secret region")]
    Overlap { start: u64, end: u64 },
    #[error("register r{0} is both a public input and a secret")]
    RegisterOverlap(u8),
    #[error("register r{0} does not exist")]
    BadRegister(u8),
    #[error("secret is {got} bytes but the manifest declares {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("data segment of {len} bytes does not fit in memory of {size} bytes")]
    DataTooLarge { len: usize, size: usize },
}

/// Where the secret lives in machine state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecretRegion {
    Memory { addr: u64, len: usize },
    /// Each register receives `width` little-endian bytes, zero-extended.
    Registers(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecretManifest {
    pub region: SecretRegion,
    /// Bytes per secret element.
    pub width: usize,
}

impl SecretManifest {
    pub fn memory(addr: u64, len: usize) -> Self {
        SecretManifest { region: SecretRegion::Memory { addr, len }, width: 1 }
    }

    pub fn registers(regs: Vec<u8>, width: usize) -> Self {
        SecretManifest { region: SecretRegion::Registers(regs), width }
    }

    /// Total secret length in bytes.
    pub fn len(&self) -> usize {
        match &self.region {
            SecretRegion::Memory { len, .. } => *len,
            SecretRegion::Registers(regs) => regs.len() * self.width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, memory_size: usize) -> Result<(), BindingError> {
        if self.is_empty() {
            return Err(BindingError::EmptySecret);
        }
        match &self.region {
            SecretRegion::Memory { addr, len } => {
                if self.width == 0 || len % self.width != 0 {
                    return Err(BindingError::BadWidth(self.width));
                }
                check_range("secret region", *addr, *len, memory_size)?;
            }
            SecretRegion::Registers(regs) => {
                if !(1..=8).contains(&self.width) {
                    return Err(BindingError::BadWidth(self.width));
                }
                if let Some(&r) = regs.iter().find(|&&r| r as usize >= INT_REGS) {
                    return Err(BindingError::BadRegister(r));
                }
            }
        }
        Ok(())
    }

    fn memory_range(&self) -> Option<Range<u64>> {
        match self.region {
            SecretRegion::Memory { addr, len } => Some(addr..addr + len as u64),
            SecretRegion::Registers(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PublicWrite {
    Memory { addr: u64, bytes: Vec<u8> },
    Register { reg: u8, value: u64 },
}

/// Public inputs plus the location of the secret.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputBinding {
    pub public_writes: Vec<PublicWrite>,
    pub secret_manifest: SecretManifest,
}

impl InputBinding {
    pub fn new(secret_manifest: SecretManifest) -> Self {
        InputBinding { public_writes: Vec::new(), secret_manifest }
    }

    pub fn with_public(mut self, write: PublicWrite) -> Self {
        self.public_writes.push(write);
        self
    }

    pub fn validate(&self, memory_size: usize) -> Result<(), BindingError> {
        self.secret_manifest.validate(memory_size)?;
        let secret_mem = self.secret_manifest.memory_range();
        for w in &self.public_writes {
            match w {
                PublicWrite::Memory { addr, bytes } => {
                    check_range("public write", *addr, bytes.len(), memory_size)?;
                    let end = addr + bytes.len() as u64;
                    if let Some(s) = &secret_mem {
                        if *addr < s.end && s.start < end {
                            return Err(BindingError::Overlap { start: *addr, end });
                        }
                    }
                }
                PublicWrite::Register { reg, .. } => {
                    if *reg as usize >= INT_REGS {
                        return Err(BindingError::BadRegister(*reg));
                    }
                    if let SecretRegion::Registers(regs) = &self.secret_manifest.region {
                        if regs.contains(reg) {
                            return Err(BindingError::RegisterOverlap(*reg));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Fresh machine state for `program`: data segment loaded, public inputs
    /// written, pc at the entry point. The secret region keeps whatever the
    /// data segment put there (zero otherwise).
    pub fn prepare(&self, program: &Program, memory_size: usize) -> Result<MachineState, BindingError> {
        self.validate(memory_size)?;
        let mut state = MachineState::new(memory_size);
        let data = program.data_segment();
        let base = super::program::DATA_BASE as usize;
        if base + data.len() > memory_size {
            return Err(BindingError::DataTooLarge { len: data.len(), size: memory_size });
        }
        state.memory[base..base + data.len()].copy_from_slice(data);
        for w in &self.public_writes {
            match w {
                PublicWrite::Memory { addr, bytes } => {
                    let a = *addr as usize;
                    state.memory[a..a + bytes.len()].copy_from_slice(bytes);
                }
                PublicWrite::Register { reg, value } => state.int_regs[*reg as usize] = *value,
            }
        }
        state.pc = program.entry();
        Ok(state)
    }
}

fn check_range(what: &'static str, addr: u64, len: usize, memory_size: usize) -> Result<(), BindingError> {
    let end = addr.checked_add(len as u64);
    match end {
        Some(end) if end <= memory_size as u64 => Ok(()),
        _ => Err(BindingError::OutOfBounds {
            what,
            start: addr,
            end: end.unwrap_or(u64::MAX),
            size: memory_size,
        }),
    }
}

/// Overwrites exactly the manifest's region with `bytes`.
pub fn inject_secret(state: &mut MachineState, manifest: &SecretManifest, bytes: &[u8]) -> Result<(), BindingError> {
    manifest.validate(state.memory.len())?;
    if bytes.len() != manifest.len() {
        return Err(BindingError::LengthMismatch { expected: manifest.len(), got: bytes.len() });
    }
    match &manifest.region {
        SecretRegion::Memory { addr, len } => {
            let a = *addr as usize;
            state.memory[a..a + len].copy_from_slice(bytes);
        }
        SecretRegion::Registers(regs) => {
            for (reg, chunk) in regs.iter().zip(bytes.chunks(manifest.width)) {
                let mut word = [0u8; 8];
                word[..chunk.len()].copy_from_slice(chunk);
                state.int_regs[*reg as usize] = u64::from_le_bytes(word);
            }
        }
    }
    Ok(())
}

/// Current contents of the secret region.
pub fn read_secret(state: &MachineState, manifest: &SecretManifest) -> Vec<u8> {
    match &manifest.region {
        SecretRegion::Memory { addr, len } => {
            let a = *addr as usize;
            state.memory[a..a + len].to_vec()
        }
        SecretRegion::Registers(regs) => regs
            .iter()
            .flat_map(|r| state.int_regs[*r as usize].to_le_bytes()[..manifest.width].to_vec())
            .collect(),
    }
}
