//! Instruction classification.
//!
//! Every instruction falls into exactly one of thirteen classes: memory loads
//! and stores, light and heavy ALU operations (each split by integer, float and
//! vector data type), and control flow. The class depends only on the mnemonic,
//! never on operand values or widths.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::isa::{Instruction, Opcode};

/// Architecture tag carried by [`builtin_map`].
pub const BUILTIN_ARCH: &str = "ctmix-isa-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InstructionClass {
    LoadInt,
    LoadFloat,
    LoadVector,
    StoreInt,
    StoreFloat,
    StoreVector,
    LightAluInt,
    LightAluFloat,
    LightAluVector,
    HeavyAluInt,
    HeavyAluFloat,
    HeavyAluVector,
    ControlFlow,
}

impl InstructionClass {
    pub const COUNT: usize = 13;

    /// All classes in vector-index order.
    pub const ALL: [InstructionClass; Self::COUNT] = [
        InstructionClass::LoadInt,
        InstructionClass::LoadFloat,
        InstructionClass::LoadVector,
        InstructionClass::StoreInt,
        InstructionClass::StoreFloat,
        InstructionClass::StoreVector,
        InstructionClass::LightAluInt,
        InstructionClass::LightAluFloat,
        InstructionClass::LightAluVector,
        InstructionClass::HeavyAluInt,
        InstructionClass::HeavyAluFloat,
        InstructionClass::HeavyAluVector,
        InstructionClass::ControlFlow,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            InstructionClass::LoadInt => "LoadInt",
            InstructionClass::LoadFloat => "LoadFloat",
            InstructionClass::LoadVector => "LoadVector",
            InstructionClass::StoreInt => "StoreInt",
            InstructionClass::StoreFloat => "StoreFloat",
            InstructionClass::StoreVector => "StoreVector",
            InstructionClass::LightAluInt => "LightAluInt",
            InstructionClass::LightAluFloat => "LightAluFloat",
            InstructionClass::LightAluVector => "LightAluVector",
            InstructionClass::HeavyAluInt => "HeavyAluInt",
            InstructionClass::HeavyAluFloat => "HeavyAluFloat",
            InstructionClass::HeavyAluVector => "HeavyAluVector",
            InstructionClass::ControlFlow => "ControlFlow",
        }
    }

    /// Column name in the mix-vector CSV schema.
    pub const fn column(self) -> &'static str {
        match self {
            InstructionClass::LoadInt => "load_int",
            InstructionClass::LoadFloat => "load_float",
            InstructionClass::LoadVector => "load_vec",
            InstructionClass::StoreInt => "store_int",
            InstructionClass::StoreFloat => "store_float",
            InstructionClass::StoreVector => "store_vec",
            InstructionClass::LightAluInt => "alu_light_int",
            InstructionClass::LightAluFloat => "alu_light_float",
            InstructionClass::LightAluVector => "alu_light_vec",
            InstructionClass::HeavyAluInt => "alu_heavy_int",
            InstructionClass::HeavyAluFloat => "alu_heavy_float",
            InstructionClass::HeavyAluVector => "alu_heavy_vec",
            InstructionClass::ControlFlow => "control_flow",
        }
    }
}

impl fmt::Display for InstructionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown instruction class `{0}`")]
pub struct UnknownClass(pub String);

impl FromStr for InstructionClass {
    type Err = UnknownClass;

    /// Case-insensitive match on the enumeration name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InstructionClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownClass(s.to_string()))
    }
}

/// The class of a mini-ISA opcode.
pub const fn class_of(op: Opcode) -> InstructionClass {
    use InstructionClass::*;
    use Opcode::*;
    match op {
        Li | Mov | Add | Sub | And | Or | Xor | Not | Shl | Shr | Slt => LightAluInt,
        Mul | Div | Rem => HeavyAluInt,
        Fli | Fmov | Fadd | Fsub | Fneg => LightAluFloat,
        Fmul | Fdiv => HeavyAluFloat,
        Vli | Vmov | Vadd | Vsub | Vand | Vor | Vxor => LightAluVector,
        Vmul => HeavyAluVector,
        Ld => LoadInt,
        Fld => LoadFloat,
        Vld => LoadVector,
        St => StoreInt,
        Fst => StoreFloat,
        Vst => StoreVector,
        Jmp | Beq | Bne | Blt | Call | Ret | Halt => ControlFlow,
    }
}

/// Classifies an assembled instruction. Operands are never consulted.
pub fn classify(instr: &Instruction) -> InstructionClass {
    class_of(instr.opcode)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("line {line}: expected `mnemonic<TAB>class`")]
    Malformed { line: usize },
    #[error("line {line}: {source}")]
    Class { line: usize, source: UnknownClass },
    #[error("line {line}: mnemonic `{mnemonic}` mapped twice")]
    Duplicate { line: usize, mnemonic: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown mnemonic `{0}`")]
pub struct UnknownMnemonic(pub String);

/// Total map from a mnemonic set to classes, for one architecture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MnemonicMap {
    arch: String,
    classes: BTreeMap<String, InstructionClass>,
}

impl MnemonicMap {
    pub fn new(arch: impl Into<String>) -> Self {
        MnemonicMap { arch: arch.into(), classes: BTreeMap::new() }
    }

    pub fn arch(&self) -> &str {
        &self.arch
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Adds a mapping. Returns false (leaving the map untouched) if the
    /// mnemonic is already present.
    pub fn insert(&mut self, mnemonic: impl Into<String>, class: InstructionClass) -> bool {
        use std::collections::btree_map::Entry;
        match self.classes.entry(mnemonic.into()) {
            Entry::Occupied(_) => false,
            Entry::Vacant(v) => {
                v.insert(class);
                true
            }
        }
    }

    pub fn classify(&self, mnemonic: &str) -> Result<InstructionClass, UnknownMnemonic> {
        self.classes
            .get(mnemonic)
            .copied()
            .ok_or_else(|| UnknownMnemonic(mnemonic.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, InstructionClass)> {
        self.classes.iter().map(|(m, c)| (m.as_str(), *c))
    }

    /// Parses the `mnemonic<TAB>class_name` format. `#` starts a comment; a
    /// `# arch: <tag>` comment sets the architecture tag.
    pub fn parse(text: &str) -> Result<MnemonicMap, MapError> {
        let mut map = MnemonicMap::new("unknown");
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(tag) = comment.trim().strip_prefix("arch:") {
                    map.arch = tag.trim().to_string();
                }
                continue;
            }
            let content = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            if content.trim().is_empty() {
                continue;
            }
            let mut fields = content.split('\t').map(str::trim).filter(|f| !f.is_empty());
            let (Some(mnemonic), Some(class), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(MapError::Malformed { line });
            };
            let class = class
                .parse::<InstructionClass>()
                .map_err(|source| MapError::Class { line, source })?;
            if !map.insert(mnemonic, class) {
                return Err(MapError::Duplicate { line, mnemonic: mnemonic.to_string() });
            }
        }
        Ok(map)
    }

    /// Renders the map in the format accepted by [`MnemonicMap::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("# arch: {}\n", self.arch);
        for (m, c) in &self.classes {
            out.push_str(m);
            out.push('\t');
            out.push_str(c.name());
            out.push('\n');
        }
        out
    }
}

/// The classification of every mini-ISA mnemonic.
pub fn builtin_map() -> MnemonicMap {
    let mut map = MnemonicMap::new(BUILTIN_ARCH);
    for &op in Opcode::ALL {
        map.insert(op.name(), class_of(op));
    }
    map
}
