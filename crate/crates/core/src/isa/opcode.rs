use std::fmt;
use std::str::FromStr;

/// The kind of operand a mnemonic accepts in a given position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperandKind {
    IntReg,
    FloatReg,
    VecReg,
    /// Integer register or integer immediate.
    IntSrc,
    /// Integer immediate, or the address of a data label.
    Imm,
    FloatImm,
    /// Code label.
    Label,
    /// `[rN+imm]`
    Mem,
}

impl fmt::Display for OperandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OperandKind::IntReg => "integer register",
            OperandKind::FloatReg => "float register",
            OperandKind::VecReg => "vector register",
            OperandKind::IntSrc => "integer register or immediate",
            OperandKind::Imm => "immediate",
            OperandKind::FloatImm => "float immediate",
            OperandKind::Label => "label",
            OperandKind::Mem => "memory operand",
        };
        f.write_str(s)
    }
}

macro_rules! opcodes {
    ($($variant:ident => $name:literal [$($kind:ident),*]),* $(,)?) => {
        /// Every mnemonic of the mini-ISA.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Opcode {
            $($variant),*
        }

        impl Opcode {
            pub const ALL: &'static [Opcode] = &[$(Opcode::$variant),*];

            pub const fn name(self) -> &'static str {
                match self {
                    $(Opcode::$variant => $name),*
                }
            }

            pub const fn signature(self) -> &'static [OperandKind] {
                match self {
                    $(Opcode::$variant => &[$(OperandKind::$kind),*]),*
                }
            }

            pub fn from_name(name: &str) -> Option<Opcode> {
                match name {
                    $($name => Some(Opcode::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

opcodes! {
    Li => "li" [IntReg, Imm],
    Mov => "mov" [IntReg, IntReg],
    Add => "add" [IntReg, IntReg, IntSrc],
    Sub => "sub" [IntReg, IntReg, IntSrc],
    And => "and" [IntReg, IntReg, IntSrc],
    Or => "or" [IntReg, IntReg, IntSrc],
    Xor => "xor" [IntReg, IntReg, IntSrc],
    Not => "not" [IntReg, IntReg],
    Shl => "shl" [IntReg, IntReg, IntSrc],
    Shr => "shr" [IntReg, IntReg, IntSrc],
    Slt => "slt" [IntReg, IntReg, IntSrc],
    Mul => "mul" [IntReg, IntReg, IntSrc],
    Div => "div" [IntReg, IntReg, IntSrc],
    Rem => "rem" [IntReg, IntReg, IntSrc],

    Fli => "fli" [FloatReg, FloatImm],
    Fmov => "fmov" [FloatReg, FloatReg],
    Fadd => "fadd" [FloatReg, FloatReg, FloatReg],
    Fsub => "fsub" [FloatReg, FloatReg, FloatReg],
    Fneg => "fneg" [FloatReg, FloatReg],
    Fmul => "fmul" [FloatReg, FloatReg, FloatReg],
    Fdiv => "fdiv" [FloatReg, FloatReg, FloatReg],

    Vli => "vli" [VecReg, Imm],
    Vmov => "vmov" [VecReg, VecReg],
    Vadd => "vadd" [VecReg, VecReg, VecReg],
    Vsub => "vsub" [VecReg, VecReg, VecReg],
    Vand => "vand" [VecReg, VecReg, VecReg],
    Vor => "vor" [VecReg, VecReg, VecReg],
    Vxor => "vxor" [VecReg, VecReg, VecReg],
    Vmul => "vmul" [VecReg, VecReg, VecReg],

    Ld => "ld" [IntReg, Mem],
    St => "st" [IntReg, Mem],
    Fld => "fld" [FloatReg, Mem],
    Fst => "fst" [FloatReg, Mem],
    Vld => "vld" [VecReg, Mem],
    Vst => "vst" [VecReg, Mem],

    Jmp => "jmp" [Label],
    Beq => "beq" [IntReg, IntSrc, Label],
    Bne => "bne" [IntReg, IntSrc, Label],
    Blt => "blt" [IntReg, IntSrc, Label],
    Call => "call" [Label],
    Ret => "ret" [],
    Halt => "halt" [],
}

impl Opcode {
    /// Whether control never falls through to the next instruction.
    pub fn is_terminator(self) -> bool {
        matches!(self, Opcode::Jmp | Opcode::Ret | Opcode::Halt)
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownOpcode(pub String);

impl FromStr for Opcode {
    type Err = UnknownOpcode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Opcode::from_name(s).ok_or_else(|| UnknownOpcode(s.to_string()))
    }
}
