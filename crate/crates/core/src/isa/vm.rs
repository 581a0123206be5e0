//! Deterministic tracing interpreter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::binding::{inject_secret, BindingError, InputBinding};
use super::opcode::Opcode;
use super::program::{Operand, Program, FLOAT_REGS, INT_REGS, VEC_LANES, VEC_REGS};
use crate::classifier::class_of;
use crate::trace::{Mnemonic, Trace, TraceEvent};

pub const DEFAULT_MEMORY_SIZE: usize = 65536;
pub const DEFAULT_BUDGET: u64 = 10_000_000;
pub const MAX_CALL_DEPTH: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct MachineState {
    pub int_regs: [u64; INT_REGS],
    pub float_regs: [f64; FLOAT_REGS],
    pub vec_regs: [[u64; VEC_LANES]; VEC_REGS],
    pub memory: Vec<u8>,
    pub pc: usize,
    pub call_stack: Vec<usize>,
}

impl MachineState {
    pub fn new(memory_size: usize) -> Self {
        MachineState {
            int_regs: [0; INT_REGS],
            float_regs: [0.0; FLOAT_REGS],
            vec_regs: [[0; VEC_LANES]; VEC_REGS],
            memory: vec![0; memory_size],
            pc: 0,
            call_stack: Vec::new(),
        }
    }

    /// Bitwise equality, treating floats by their bit patterns so NaN
    /// registers compare equal to themselves.
    pub fn bitwise_eq(&self, other: &MachineState) -> bool {
        self.int_regs == other.int_regs
            && self.float_regs.iter().map(|f| f.to_bits()).eq(other.float_regs.iter().map(|f| f.to_bits()))
            && self.vec_regs == other.vec_regs
            && self.memory == other.memory
            && self.pc == other.pc
            && self.call_stack == other.call_stack
    }
}

/// Which function to trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub function_label: String,
    /// Include instructions retired inside functions the target calls.
    pub trace_callees: bool,
}

impl TargetSpec {
    pub fn new(function_label: impl Into<String>) -> Self {
        TargetSpec { function_label: function_label.into(), trace_callees: true }
    }

    pub fn without_callees(mut self) -> Self {
        self.trace_callees = false;
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("target label `{0}` is not defined")]
    UnknownTarget(String),
    #[error("execution budget of {budget} instructions exhausted at pc {pc} (possible non-termination)")]
    BudgetExhausted { budget: u64, pc: usize },
    #[error("memory fault at pc {pc}: access of {len} bytes at address {addr:#x}")]
    MemoryFault { pc: usize, addr: u64, len: usize },
    #[error("call stack overflow at pc {pc} (depth {MAX_CALL_DEPTH})")]
    StackOverflow { pc: usize },
    #[error("integer division by zero at pc {pc}")]
    DivisionByZero { pc: usize },
    #[error("pc {pc} outside program")]
    PcOutOfBounds { pc: usize },
    #[error("budget must be positive")]
    ZeroBudget,
    #[error(transparent)]
    Binding(#[from] BindingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Halted,
    /// `ret` with an empty call stack.
    Returned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Execution {
    pub trace: Trace,
    pub exit: ExitStatus,
    /// Every instruction retired, traced or not.
    pub retired: u64,
    pub state: MachineState,
}

enum Flow {
    Next,
    Jump(usize),
    Call(usize),
    Ret,
    Halt,
}

/// Runs `program` from its entry with the given public inputs. The secret
/// region holds its initial contents; see [`run_with_secret`].
pub fn execute(program: &Program, binding: &InputBinding, target: &TargetSpec, budget: u64) -> Result<Execution, ExecError> {
    let state = binding.prepare(program, DEFAULT_MEMORY_SIZE)?;
    execute_state(program, state, target, budget)
}

/// Prepares state, injects `secret`, and runs.
pub fn run_with_secret(
    program: &Program,
    binding: &InputBinding,
    secret: &[u8],
    target: &TargetSpec,
    budget: u64,
) -> Result<Execution, ExecError> {
    let mut state = binding.prepare(program, DEFAULT_MEMORY_SIZE)?;
    inject_secret(&mut state, &binding.secret_manifest, secret)?;
    execute_state(program, state, target, budget)
}

/// Runs from `state.pc` until `halt` or a top-level `ret`, tracing the
/// dynamic extent of every call into the target.
pub fn execute_state(
    program: &Program,
    mut state: MachineState,
    target: &TargetSpec,
    budget: u64,
) -> Result<Execution, ExecError> {
    if budget == 0 {
        return Err(ExecError::ZeroBudget);
    }
    let target_pc = program
        .label(&target.function_label)
        .ok_or_else(|| ExecError::UnknownTarget(target.function_label.clone()))?;

    let mut trace = Trace::new();
    let mut retired = 0u64;
    // Call depth at which the traced activation runs.
    let mut active: Option<usize> = (state.pc == target_pc).then_some(state.call_stack.len());

    loop {
        let pc = state.pc;
        if retired == budget {
            return Err(ExecError::BudgetExhausted { budget, pc });
        }
        let instr = program.instructions.get(pc).ok_or(ExecError::PcOutOfBounds { pc })?;
        let traced = match active {
            Some(depth) => target.trace_callees || state.call_stack.len() == depth,
            None => false,
        };

        let flow = step(&mut state, instr.opcode, &instr.operands, pc)?;
        retired += 1;
        if traced {
            trace.push(TraceEvent {
                index: pc,
                mnemonic: Mnemonic::Isa(instr.opcode),
                class: class_of(instr.opcode),
            });
        }

        match flow {
            Flow::Next => state.pc = pc + 1,
            Flow::Jump(t) => state.pc = t,
            Flow::Call(t) => {
                if state.call_stack.len() >= MAX_CALL_DEPTH {
                    return Err(ExecError::StackOverflow { pc });
                }
                state.call_stack.push(pc + 1);
                state.pc = t;
                if active.is_none() && t == target_pc {
                    active = Some(state.call_stack.len());
                }
            }
            Flow::Ret => {
                if active == Some(state.call_stack.len()) {
                    active = None;
                }
                match state.call_stack.pop() {
                    Some(ret) => state.pc = ret,
                    None => return Ok(Execution { trace, exit: ExitStatus::Returned, retired, state }),
                }
            }
            Flow::Halt => return Ok(Execution { trace, exit: ExitStatus::Halted, retired, state }),
        }
    }
}

fn int_src(state: &MachineState, op: &Operand) -> u64 {
    match *op {
        Operand::IntReg(r) => state.int_regs[r as usize],
        Operand::Imm(v) => v as u64,
        _ => unreachable!("assembler guarantees integer source"),
    }
}

fn int_reg(op: &Operand) -> usize {
    match *op {
        Operand::IntReg(r) => r as usize,
        _ => unreachable!("assembler guarantees integer register"),
    }
}

fn float_reg(op: &Operand) -> usize {
    match *op {
        Operand::FloatReg(r) => r as usize,
        _ => unreachable!("assembler guarantees float register"),
    }
}

fn vec_reg(op: &Operand) -> usize {
    match *op {
        Operand::VecReg(r) => r as usize,
        _ => unreachable!("assembler guarantees vector register"),
    }
}

fn target(op: &Operand) -> usize {
    match *op {
        Operand::Target(t) => t,
        _ => unreachable!("assembler guarantees resolved label"),
    }
}

fn address(state: &MachineState, op: &Operand, len: usize, pc: usize) -> Result<usize, ExecError> {
    let Operand::Mem { base, offset } = *op else {
        unreachable!("assembler guarantees memory operand")
    };
    let addr = state.int_regs[base as usize].wrapping_add(offset as u64);
    match addr.checked_add(len as u64) {
        Some(end) if end <= state.memory.len() as u64 => Ok(addr as usize),
        _ => Err(ExecError::MemoryFault { pc, addr, len }),
    }
}

fn load_u64(mem: &[u8], a: usize) -> u64 {
    u64::from_le_bytes(mem[a..a + 8].try_into().unwrap())
}

fn step(state: &mut MachineState, opcode: Opcode, ops: &[Operand], pc: usize) -> Result<Flow, ExecError> {
    use Opcode::*;

    macro_rules! int_binop {
        ($f:expr) => {{
            let a = state.int_regs[int_reg(&ops[1])];
            let b = int_src(state, &ops[2]);
            state.int_regs[int_reg(&ops[0])] = $f(a, b);
            Flow::Next
        }};
    }
    macro_rules! float_binop {
        ($f:expr) => {{
            let a = state.float_regs[float_reg(&ops[1])];
            let b = state.float_regs[float_reg(&ops[2])];
            state.float_regs[float_reg(&ops[0])] = $f(a, b);
            Flow::Next
        }};
    }
    macro_rules! vec_binop {
        ($f:expr) => {{
            let a = state.vec_regs[vec_reg(&ops[1])];
            let b = state.vec_regs[vec_reg(&ops[2])];
            let mut out = [0u64; VEC_LANES];
            for lane in 0..VEC_LANES {
                out[lane] = $f(a[lane], b[lane]);
            }
            state.vec_regs[vec_reg(&ops[0])] = out;
            Flow::Next
        }};
    }
    macro_rules! branch {
        ($cond:expr) => {{
            let a = state.int_regs[int_reg(&ops[0])];
            let b = int_src(state, &ops[1]);
            if $cond(a, b) {
                Flow::Jump(target(&ops[2]))
            } else {
                Flow::Next
            }
        }};
    }

    let flow = match opcode {
        Li => {
            state.int_regs[int_reg(&ops[0])] = int_src(state, &ops[1]);
            Flow::Next
        }
        Mov => {
            state.int_regs[int_reg(&ops[0])] = state.int_regs[int_reg(&ops[1])];
            Flow::Next
        }
        Add => int_binop!(u64::wrapping_add),
        Sub => int_binop!(u64::wrapping_sub),
        And => int_binop!(|a, b| a & b),
        Or => int_binop!(|a, b| a | b),
        Xor => int_binop!(|a, b| a ^ b),
        Not => {
            state.int_regs[int_reg(&ops[0])] = !state.int_regs[int_reg(&ops[1])];
            Flow::Next
        }
        Shl => int_binop!(|a: u64, b: u64| a.wrapping_shl(b as u32 & 63)),
        Shr => int_binop!(|a: u64, b: u64| a.wrapping_shr(b as u32 & 63)),
        Slt => int_binop!(|a: u64, b: u64| ((a as i64) < (b as i64)) as u64),
        Mul => int_binop!(u64::wrapping_mul),
        Div | Rem => {
            let a = state.int_regs[int_reg(&ops[1])];
            let b = int_src(state, &ops[2]);
            if b == 0 {
                return Err(ExecError::DivisionByZero { pc });
            }
            state.int_regs[int_reg(&ops[0])] = if opcode == Div { a / b } else { a % b };
            Flow::Next
        }

        Fli => {
            let Operand::FloatImm(v) = ops[1] else { unreachable!() };
            state.float_regs[float_reg(&ops[0])] = v;
            Flow::Next
        }
        Fmov => {
            state.float_regs[float_reg(&ops[0])] = state.float_regs[float_reg(&ops[1])];
            Flow::Next
        }
        Fneg => {
            state.float_regs[float_reg(&ops[0])] = -state.float_regs[float_reg(&ops[1])];
            Flow::Next
        }
        Fadd => float_binop!(|a: f64, b: f64| a + b),
        Fsub => float_binop!(|a: f64, b: f64| a - b),
        Fmul => float_binop!(|a: f64, b: f64| a * b),
        Fdiv => float_binop!(|a: f64, b: f64| a / b),

        Vli => {
            let v = int_src(state, &ops[1]);
            state.vec_regs[vec_reg(&ops[0])] = [v; VEC_LANES];
            Flow::Next
        }
        Vmov => {
            state.vec_regs[vec_reg(&ops[0])] = state.vec_regs[vec_reg(&ops[1])];
            Flow::Next
        }
        Vadd => vec_binop!(u64::wrapping_add),
        Vsub => vec_binop!(u64::wrapping_sub),
        Vand => vec_binop!(|a, b| a & b),
        Vor => vec_binop!(|a, b| a | b),
        Vxor => vec_binop!(|a, b| a ^ b),
        Vmul => vec_binop!(u64::wrapping_mul),

        Ld => {
            let a = address(state, &ops[1], 8, pc)?;
            state.int_regs[int_reg(&ops[0])] = load_u64(&state.memory, a);
            Flow::Next
        }
        St => {
            let a = address(state, &ops[1], 8, pc)?;
            let v = state.int_regs[int_reg(&ops[0])];
            state.memory[a..a + 8].copy_from_slice(&v.to_le_bytes());
            Flow::Next
        }
        Fld => {
            let a = address(state, &ops[1], 8, pc)?;
            state.float_regs[float_reg(&ops[0])] = f64::from_bits(load_u64(&state.memory, a));
            Flow::Next
        }
        Fst => {
            let a = address(state, &ops[1], 8, pc)?;
            let v = state.float_regs[float_reg(&ops[0])].to_bits();
            state.memory[a..a + 8].copy_from_slice(&v.to_le_bytes());
            Flow::Next
        }
        Vld => {
            let a = address(state, &ops[1], 8 * VEC_LANES, pc)?;
            let mut v = [0u64; VEC_LANES];
            for (lane, slot) in v.iter_mut().enumerate() {
                *slot = load_u64(&state.memory, a + 8 * lane);
            }
            state.vec_regs[vec_reg(&ops[0])] = v;
            Flow::Next
        }
        Vst => {
            let a = address(state, &ops[1], 8 * VEC_LANES, pc)?;
            let v = state.vec_regs[vec_reg(&ops[0])];
            for (lane, word) in v.iter().enumerate() {
                let at = a + 8 * lane;
                state.memory[at..at + 8].copy_from_slice(&word.to_le_bytes());
            }
            Flow::Next
        }

        Jmp => Flow::Jump(target(&ops[0])),
        Beq => branch!(|a, b| a == b),
        Bne => branch!(|a, b| a != b),
        Blt => branch!(|a: u64, b: u64| (a as i64) < (b as i64)),
        Call => Flow::Call(target(&ops[0])),
        Ret => Flow::Ret,
        Halt => Flow::Halt,
    };
    Ok(flow)
}
