use std::collections::BTreeMap;
use std::fmt;

use super::opcode::Opcode;

/// Address at which the data segment is loaded.
pub const DATA_BASE: u64 = 0;

pub const INT_REGS: usize = 32;
pub const FLOAT_REGS: usize = 16;
pub const VEC_REGS: usize = 8;
pub const VEC_LANES: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Operand {
    IntReg(u8),
    FloatReg(u8),
    VecReg(u8),
    Imm(i64),
    FloatImm(f64),
    /// Resolved code label (instruction index).
    Target(usize),
    Mem { base: u8, offset: i64 },
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Operand::IntReg(r) => write!(f, "r{r}"),
            Operand::FloatReg(r) => write!(f, "f{r}"),
            Operand::VecReg(r) => write!(f, "v{r}"),
            Operand::Imm(v) => write!(f, "{v}"),
            Operand::FloatImm(v) => write!(f, "{v:?}"),
            Operand::Target(t) => write!(f, "@{t}"),
            Operand::Mem { base, offset } if offset < 0 => write!(f, "[r{base}{offset}]"),
            Operand::Mem { base, offset } => write!(f, "[r{base}+{offset}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instruction {
    pub opcode: Opcode,
    pub operands: Vec<Operand>,
}

impl Instruction {
    pub fn mnemonic(&self) -> &'static str {
        self.opcode.name()
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.opcode.name())?;
        for (i, op) in self.operands.iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

/// An assembled program. Only [`super::assemble`] constructs one, so every
/// label is resolved and every operand matches its mnemonic's signature.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub(super) instructions: Vec<Instruction>,
    pub(super) source_lines: Vec<usize>,
    pub(super) labels: BTreeMap<String, usize>,
    pub(super) data_labels: BTreeMap<String, u64>,
    pub(super) entry: usize,
    pub(super) data: Vec<u8>,
}

impl Program {
    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Code labels.
    pub fn labels(&self) -> &BTreeMap<String, usize> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<usize> {
        self.labels.get(name).copied()
    }

    /// Data labels and their absolute addresses.
    pub fn data_labels(&self) -> &BTreeMap<String, u64> {
        &self.data_labels
    }

    /// `main` if defined, otherwise the first instruction.
    pub fn entry(&self) -> usize {
        self.entry
    }

    pub fn data_segment(&self) -> &[u8] {
        &self.data
    }

    /// Source line (1-based) of the instruction at `index`.
    pub fn source_line(&self, index: usize) -> Option<usize> {
        self.source_lines.get(index).copied()
    }
}
