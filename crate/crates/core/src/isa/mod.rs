//! The mini-ISA: opcodes, assembler, and the tracing virtual machine.

mod assembler;
mod binding;
mod opcode;
mod program;
mod vm;

pub use assembler::{assemble, AsmError};
pub use binding::{inject_secret, read_secret, BindingError, InputBinding, PublicWrite, SecretManifest, SecretRegion};
pub use opcode::{Opcode, OperandKind, UnknownOpcode};
pub use program::{Instruction, Operand, Program, DATA_BASE, FLOAT_REGS, INT_REGS, VEC_LANES, VEC_REGS};
pub use vm::{
    execute, execute_state, run_with_secret, ExecError, Execution, ExitStatus, MachineState, TargetSpec,
    DEFAULT_BUDGET, DEFAULT_MEMORY_SIZE, MAX_CALL_DEPTH,
};

/// Version tag of the instruction set, echoed in reports.
pub const ISA_VERSION: &str = "ctmix-isa-v1";
