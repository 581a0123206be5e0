//! Helpers shared by the integration test targets.
#![allow(dead_code)]

pub mod props;

use ctmix_core::trace::Trace;

/// Column order of the mix CSV / `InstructionClass::ALL`.
pub const COLUMNS: [&str; 13] = [
    "load_int",
    "load_float",
    "load_vec",
    "store_int",
    "store_float",
    "store_vec",
    "alu_light_int",
    "alu_light_float",
    "alu_light_vec",
    "alu_heavy_int",
    "alu_heavy_float",
    "alu_heavy_vec",
    "control_flow",
];

/// Every mnemonic of the ISA, grouped by class, written out by hand.
pub const BY_COLUMN: [(&str, &[&str]); 13] = [
    ("load_int", &["ld"]),
    ("load_float", &["fld"]),
    ("load_vec", &["vld"]),
    ("store_int", &["st"]),
    ("store_float", &["fst"]),
    ("store_vec", &["vst"]),
    ("alu_light_int", &["li", "mov", "add", "sub", "and", "or", "xor", "not", "shl", "shr", "slt"]),
    ("alu_light_float", &["fli", "fmov", "fadd", "fsub", "fneg"]),
    ("alu_light_vec", &["vli", "vmov", "vadd", "vsub", "vand", "vor", "vxor"]),
    ("alu_heavy_int", &["mul", "div", "rem"]),
    ("alu_heavy_float", &["fmul", "fdiv"]),
    ("alu_heavy_vec", &["vmul"]),
    ("control_flow", &["jmp", "beq", "bne", "blt", "call", "ret", "halt"]),
];

pub fn all_mnemonics() -> Vec<&'static str> {
    BY_COLUMN.iter().flat_map(|(_, ms)| ms.iter().copied()).collect()
}

/// Single-pass count over mnemonic names, deliberately not using the
/// classifier or `build_mix`.
pub fn naive_tally(trace: &Trace) -> [u64; 13] {
    let mut counts = [0u64; 13];
    for event in trace.iter() {
        let name = event.mnemonic.as_str();
        let slot = BY_COLUMN
            .iter()
            .position(|(_, ms)| ms.contains(&name))
            .unwrap_or_else(|| panic!("mnemonic `{name}` missing from the hand table"));
        counts[slot] += 1;
    }
    counts
}

/// One straight-line instruction drawn from a template table. Branches always
/// target the next instruction and calls go to a two-instruction helper, so
/// the traced length is known in advance.
#[derive(Clone, Debug)]
pub struct Step {
    pub template: usize,
    pub a: u8,
    pub b: u8,
    pub imm: i16,
}

pub const TEMPLATES: usize = 41;

fn render_step(step: &Step, next: &str) -> String {
    // r0 stays zero and serves as the memory base.
    let (ra, rb, rc) = (1 + step.a % 15, 1 + step.b % 15, 1 + (step.a ^ step.b) % 15);
    let (fa, fb, fc) = (step.a % 8, step.b % 8, (step.a ^ step.b) % 8);
    let (va, vb, vc) = (step.a % 8, step.b % 8, (step.a ^ step.b) % 8);
    let imm = step.imm;
    let small = (imm as i64).rem_euclid(60);
    let divisor = 1 + (imm as i64).rem_euclid(97);
    let addr = (imm as i64).rem_euclid(4000);
    match step.template {
        0 => format!("li r{ra}, {imm}"),
        1 => format!("mov r{ra}, r{rb}"),
        2 => format!("add r{ra}, r{rb}, r{rc}"),
        3 => format!("sub r{ra}, r{rb}, {imm}"),
        4 => format!("and r{ra}, r{rb}, r{rc}"),
        5 => format!("or r{ra}, r{rb}, {imm}"),
        6 => format!("xor r{ra}, r{rb}, r{rc}"),
        7 => format!("not r{ra}, r{rb}"),
        8 => format!("shl r{ra}, r{rb}, {small}"),
        9 => format!("shr r{ra}, r{rb}, r{rc}"),
        10 => format!("slt r{ra}, r{rb}, r{rc}"),
        11 => format!("mul r{ra}, r{rb}, r{rc}"),
        12 => format!("div r{ra}, r{rb}, {divisor}"),
        13 => format!("rem r{ra}, r{rb}, {divisor}"),
        14 => format!("fli f{fa}, {imm}.5"),
        15 => format!("fmov f{fa}, f{fb}"),
        16 => format!("fadd f{fa}, f{fb}, f{fc}"),
        17 => format!("fsub f{fa}, f{fb}, f{fc}"),
        18 => format!("fneg f{fa}, f{fb}"),
        19 => format!("fmul f{fa}, f{fb}, f{fc}"),
        20 => format!("fdiv f{fa}, f{fb}, f{fc}"),
        21 => format!("vli v{va}, {imm}"),
        22 => format!("vmov v{va}, v{vb}"),
        23 => format!("vadd v{va}, v{vb}, v{vc}"),
        24 => format!("vsub v{va}, v{vb}, v{vc}"),
        25 => format!("vand v{va}, v{vb}, v{vc}"),
        26 => format!("vor v{va}, v{vb}, v{vc}"),
        27 => format!("vxor v{va}, v{vb}, v{vc}"),
        28 => format!("vmul v{va}, v{vb}, v{vc}"),
        29 => format!("ld r{ra}, [r0+{addr}]"),
        30 => format!("st r{ra}, [r0+{addr}]"),
        31 => format!("fld f{fa}, [r0+{addr}]"),
        32 => format!("fst f{fa}, [r0+{addr}]"),
        33 => format!("vld v{va}, [r0+{addr}]"),
        34 => format!("vst v{va}, [r0+{addr}]"),
        35 => format!("jmp {next}"),
        36 => format!("beq r{ra}, r{rb}, {next}"),
        37 => format!("bne r{ra}, {imm}, {next}"),
        38 => format!("blt r{ra}, r{rb}, {next}"),
        39 | 40 => "call helper".to_string(),
        _ => unreachable!("template index out of range"),
    }
}

/// Assembly for `main: call target; halt` around the generated body.
pub fn render_program(steps: &[Step]) -> String {
    let mut src = String::from("main:   call target\n        halt\ntarget:\n");
    for (i, step) in steps.iter().enumerate() {
        src.push_str(&format!("s{i}:     {}\n", render_step(step, &format!("s{}", i + 1))));
    }
    src.push_str(&format!("s{}:     ret\n", steps.len()));
    src.push_str("helper: add r20, r20, 1\n        ret\n");
    src
}

/// Traced length with callees included: the body, the final `ret`, and two
/// events per helper call.
pub fn expected_trace_len(steps: &[Step]) -> usize {
    steps.len() + 1 + 2 * steps.iter().filter(|s| s.template >= 39).count()
}

/// Deterministic byte generator for test inputs, independent of the crate's
/// own generator.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 11
    }

    pub fn bytes(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.next() as u8).collect()
    }
}

pub fn fixture_path(table: &str, name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(table).join(format!("{name}.csv"))
}

pub fn load_fixture(table: &str, name: &str) -> Vec<(u64, ctmix_core::MixVector)> {
    let text = std::fs::read_to_string(fixture_path(table, name)).unwrap();
    ctmix_core::ingest::parse_mix_csv(&text).unwrap()
}

/// `(fixture name, constant-time?)` for the twelve builds of one table.
pub fn fixture_names() -> Vec<(String, bool)> {
    let mut out = Vec::new();
    for (kind, ct) in [("ct", true), ("nct", false)] {
        for compiler in ["gcc", "clang"] {
            for opt in ["O0", "O1", "O2"] {
                out.push((format!("{kind}_{compiler}_{opt}"), ct));
            }
        }
    }
    out
}
