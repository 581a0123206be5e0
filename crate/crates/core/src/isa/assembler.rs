//! Text assembler for the mini-ISA.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! [label:] mnemonic [op1[, op2[, op3]]]   ; comment
//! ```
//!
//! `.data` switches to the data section, where `.byte`, `.word` (64-bit
//! little-endian) and `.ascii` emit bytes; `.text` switches back. Data labels
//! evaluate to their absolute address wherever an immediate is expected.

use std::collections::BTreeMap;

use thiserror::Error;

use super::opcode::{Opcode, OperandKind};
use super::program::{Instruction, Operand, Program, DATA_BASE, FLOAT_REGS, INT_REGS, VEC_REGS};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AsmError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{line}:{column}: unknown mnemonic `{mnemonic}`")]
    UnknownMnemonic { line: usize, column: usize, mnemonic: String },
    #[error("{line}:{column}: unresolved label `{label}`")]
    UnresolvedLabel { line: usize, column: usize, label: String },
    #[error("{line}:{column}: duplicate label `{label}`")]
    DuplicateLabel { line: usize, column: usize, label: String },
    #[error("{line}:{column}: `{mnemonic}` operand {position} expects {expected}, found {found}")]
    OperandKind {
        line: usize,
        column: usize,
        mnemonic: &'static str,
        position: usize,
        expected: OperandKind,
        found: &'static str,
    },
    #[error("{line}:{column}: `{mnemonic}` takes {expected} operand(s), found {found}")]
    OperandCount { line: usize, column: usize, mnemonic: &'static str, expected: usize, found: usize },
    #[error("program has no instructions")]
    EmptyProgram,
    #[error("{line}: last instruction `{mnemonic}` falls through past the end of the program")]
    FallsOffEnd { line: usize, mnemonic: &'static str },
}

impl AsmError {
    fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        AsmError::Syntax { line, column, message: message.into() }
    }
}

/// Syntactic shape of an operand token before it is checked against a
/// signature.
#[derive(Clone, Debug, PartialEq)]
enum Token {
    IntReg(u8),
    FloatReg(u8),
    VecReg(u8),
    Int(i64),
    Float(f64),
    Ident(String),
    Mem { base: u8, offset: i64 },
}

impl Token {
    fn describe(&self) -> &'static str {
        match self {
            Token::IntReg(_) => "integer register",
            Token::FloatReg(_) => "float register",
            Token::VecReg(_) => "vector register",
            Token::Int(_) => "integer literal",
            Token::Float(_) => "float literal",
            Token::Ident(_) => "label",
            Token::Mem { .. } => "memory operand",
        }
    }
}

/// Operand awaiting label resolution.
#[derive(Debug)]
enum Pending {
    Ready(Operand),
    CodeLabel(String, usize),
    DataLabel(String, usize),
}

struct PendingInstr {
    opcode: Opcode,
    operands: Vec<Pending>,
    line: usize,
}

#[derive(PartialEq)]
enum Section {
    Text,
    Data,
}

enum LabelDef {
    Code(usize),
    Data(u64),
}

/// Assembles source text into a [`Program`].
pub fn assemble(source: &str) -> Result<Program, AsmError> {
    let mut section = Section::Text;
    let mut pending: Vec<PendingInstr> = Vec::new();
    let mut data: Vec<u8> = Vec::new();
    let mut labels: BTreeMap<String, LabelDef> = BTreeMap::new();

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let body = strip_comment(raw);
        let mut cursor = Cursor { text: body, pos: 0 };

        // Leading labels.
        loop {
            cursor.skip_ws();
            let save = cursor.pos;
            let Some(ident) = cursor.ident() else { break };
            cursor.skip_ws();
            if cursor.eat(':') {
                let column = save + 1;
                let def = match section {
                    Section::Text => LabelDef::Code(pending.len()),
                    Section::Data => LabelDef::Data(DATA_BASE + data.len() as u64),
                };
                if labels.insert(ident.to_string(), def).is_some() {
                    return Err(AsmError::DuplicateLabel { line, column, label: ident.into() });
                }
            } else {
                cursor.pos = save;
                break;
            }
        }

        cursor.skip_ws();
        if cursor.at_end() {
            continue;
        }
        let head_col = cursor.pos + 1;

        if cursor.peek() == Some('.') {
            cursor.pos += 1;
            let name = cursor
                .ident()
                .ok_or_else(|| AsmError::syntax(line, head_col, "expected directive name"))?;
            let args = &body[cursor.pos..];
            let args_col = cursor.pos;
            match name {
                "data" | "text" => {
                    if !args.trim().is_empty() {
                        return Err(AsmError::syntax(line, head_col, format!(".{name} takes no arguments")));
                    }
                    section = if name == "data" { Section::Data } else { Section::Text };
                }
                "byte" | "word" | "ascii" => {
                    if section != Section::Data {
                        return Err(AsmError::syntax(
                            line,
                            head_col,
                            format!(".{name} is only allowed in the .data section"),
                        ));
                    }
                    emit_data(name, args, args_col, line, &mut data)?;
                }
                other => {
                    return Err(AsmError::syntax(line, head_col, format!("unknown directive `.{other}`")));
                }
            }
            continue;
        }

        let mnemonic = cursor
            .ident()
            .ok_or_else(|| AsmError::syntax(line, head_col, "expected mnemonic"))?;
        if section != Section::Text {
            return Err(AsmError::syntax(line, head_col, "instruction inside .data section"));
        }
        let opcode = Opcode::from_name(mnemonic).ok_or_else(|| AsmError::UnknownMnemonic {
            line,
            column: head_col,
            mnemonic: mnemonic.to_string(),
        })?;

        let operand_start = cursor.pos;
        let raw_operands = split_operands(&body[operand_start..], operand_start, line)?;
        let signature = opcode.signature();
        if raw_operands.len() != signature.len() {
            return Err(AsmError::OperandCount {
                line,
                column: head_col,
                mnemonic: opcode.name(),
                expected: signature.len(),
                found: raw_operands.len(),
            });
        }
        let mut operands = Vec::with_capacity(signature.len());
        for (position, ((text, column), &kind)) in raw_operands.iter().zip(signature).enumerate() {
            let token = parse_token(text, *column, line)?;
            operands.push(check_kind(opcode, position + 1, kind, token, line, *column)?);
        }
        pending.push(PendingInstr { opcode, operands, line });
    }

    if pending.is_empty() {
        return Err(AsmError::EmptyProgram);
    }
    let last = pending.last().unwrap();
    if !last.opcode.is_terminator() {
        return Err(AsmError::FallsOffEnd { line: last.line, mnemonic: last.opcode.name() });
    }

    let mut code_labels = BTreeMap::new();
    let mut data_labels = BTreeMap::new();
    for (name, def) in labels {
        match def {
            LabelDef::Code(i) => {
                code_labels.insert(name, i);
            }
            LabelDef::Data(a) => {
                data_labels.insert(name, a);
            }
        }
    }

    let mut instructions = Vec::with_capacity(pending.len());
    let mut source_lines = Vec::with_capacity(pending.len());
    let count = pending.len();
    for p in pending {
        let mut operands = Vec::with_capacity(p.operands.len());
        for op in p.operands {
            let resolved = match op {
                Pending::Ready(o) => o,
                Pending::CodeLabel(name, column) => match code_labels.get(&name) {
                    // A label after the last instruction has nothing to jump to.
                    Some(&i) if i < count => Operand::Target(i),
                    _ => return Err(AsmError::UnresolvedLabel { line: p.line, column, label: name }),
                },
                Pending::DataLabel(name, column) => match data_labels.get(&name) {
                    Some(&a) => Operand::Imm(a as i64),
                    None => return Err(AsmError::UnresolvedLabel { line: p.line, column, label: name }),
                },
            };
            operands.push(resolved);
        }
        instructions.push(Instruction { opcode: p.opcode, operands });
        source_lines.push(p.line);
    }

    let entry = match code_labels.get("main") {
        Some(&i) if i < count => i,
        _ => 0,
    };

    Ok(Program {
        instructions,
        source_lines,
        labels: code_labels,
        data_labels,
        entry,
        data,
    })
}

fn check_kind(
    opcode: Opcode,
    position: usize,
    kind: OperandKind,
    token: Token,
    line: usize,
    column: usize,
) -> Result<Pending, AsmError> {
    let found = token.describe();
    let ready = |o| Ok(Pending::Ready(o));
    match (kind, token) {
        (OperandKind::IntReg | OperandKind::IntSrc, Token::IntReg(r)) => ready(Operand::IntReg(r)),
        (OperandKind::FloatReg, Token::FloatReg(r)) => ready(Operand::FloatReg(r)),
        (OperandKind::VecReg, Token::VecReg(r)) => ready(Operand::VecReg(r)),
        (OperandKind::IntSrc | OperandKind::Imm, Token::Int(v)) => ready(Operand::Imm(v)),
        (OperandKind::Imm, Token::Ident(name)) => Ok(Pending::DataLabel(name, column)),
        (OperandKind::FloatImm, Token::Float(v)) => ready(Operand::FloatImm(v)),
        (OperandKind::FloatImm, Token::Int(v)) => ready(Operand::FloatImm(v as f64)),
        (OperandKind::Label, Token::Ident(name)) => Ok(Pending::CodeLabel(name, column)),
        (OperandKind::Mem, Token::Mem { base, offset }) => ready(Operand::Mem { base, offset }),
        (expected, _) => Err(AsmError::OperandKind {
            line,
            column,
            mnemonic: opcode.name(),
            position,
            expected,
            found,
        }),
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            ';' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn at_end(&self) -> bool {
        self.text[self.pos..].trim().is_empty()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        let rest = &self.text[self.pos..];
        let mut end = 0;
        for (i, c) in rest.char_indices() {
            let ok = if i == 0 { c.is_ascii_alphabetic() || c == '_' } else { c.is_ascii_alphanumeric() || c == '_' };
            if !ok {
                break;
            }
            end = i + c.len_utf8();
        }
        if end == 0 {
            return None;
        }
        self.pos += end;
        Some(&rest[..end])
    }
}

/// Splits on top-level commas. Returns each trimmed operand with its 1-based
/// column.
fn split_operands(text: &str, offset: usize, line: usize) -> Result<Vec<(String, usize)>, AsmError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    if !text.starts_with(char::is_whitespace) {
        return Err(AsmError::syntax(line, offset + 1, "expected whitespace after mnemonic"));
    }
    let mut out = Vec::new();
    let mut start = 0;
    let mut depth = 0i32;
    let push = |from: usize, to: usize, out: &mut Vec<(String, usize)>| {
        let piece = &text[from..to];
        let lead = piece.len() - piece.trim_start().len();
        let trimmed = piece.trim();
        if trimmed.is_empty() {
            return Err(AsmError::syntax(line, offset + from + 1, "empty operand"));
        }
        out.push((trimmed.to_string(), offset + from + lead + 1));
        Ok(())
    };
    for (i, c) in text.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                push(start, i, &mut out)?;
                start = i + 1;
            }
            _ => {}
        }
    }
    push(start, text.len(), &mut out)?;
    Ok(out)
}

fn parse_register(text: &str) -> Option<Result<Token, String>> {
    let (prefix, digits) = text.split_at(1);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let n: usize = digits.parse().ok()?;
    let (limit, make): (usize, fn(u8) -> Token) = match prefix {
        "r" => (INT_REGS, Token::IntReg),
        "f" => (FLOAT_REGS, Token::FloatReg),
        "v" => (VEC_REGS, Token::VecReg),
        _ => return None,
    };
    Some(if n < limit {
        Ok(make(n as u8))
    } else {
        Err(format!("register `{text}` out of range ({prefix}0..{prefix}{})", limit - 1))
    })
}

fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_token(text: &str, column: usize, line: usize) -> Result<Token, AsmError> {
    if let Some(inner) = text.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| AsmError::syntax(line, column, "unterminated memory operand"))?
            .trim();
        let split = inner.find(['+', '-']).unwrap_or(inner.len());
        let (base_text, off_text) = inner.split_at(split);
        let base = match parse_register(base_text.trim()) {
            Some(Ok(Token::IntReg(r))) => r,
            Some(Err(msg)) => return Err(AsmError::syntax(line, column, msg)),
            _ => {
                return Err(AsmError::syntax(line, column, "memory base must be an integer register"));
            }
        };
        let offset = if off_text.is_empty() {
            0
        } else {
            let (neg, mag) = off_text.split_at(1);
            let v = parse_int(mag.trim())
                .ok_or_else(|| AsmError::syntax(line, column, format!("bad memory offset `{off_text}`")))?;
            if neg == "-" {
                v.wrapping_neg()
            } else {
                v
            }
        };
        return Ok(Token::Mem { base, offset });
    }
    if is_identifier(text) {
        return match parse_register(text) {
            Some(Ok(tok)) => Ok(tok),
            Some(Err(msg)) => Err(AsmError::syntax(line, column, msg)),
            None => Ok(Token::Ident(text.to_string())),
        };
    }
    if let Some(v) = parse_int(text) {
        return Ok(Token::Int(v));
    }
    if let Ok(v) = text.parse::<f64>() {
        return Ok(Token::Float(v));
    }
    Err(AsmError::syntax(line, column, format!("unrecognised operand `{text}`")))
}

/// Decimal, `0x`, `0b` or `'c'` literal with an optional sign. Unsigned
/// values above `i64::MAX` keep their bit pattern.
fn parse_int(text: &str) -> Option<i64> {
    if let Some(inner) = text.strip_prefix('\'').and_then(|t| t.strip_suffix('\'')) {
        let bytes = unescape(inner).ok()?;
        return match bytes.as_slice() {
            [b] => Some(*b as i64),
            _ => None,
        };
    }
    let (neg, mag) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let value = if let Some(hex) = mag.strip_prefix("0x").or_else(|| mag.strip_prefix("0X")) {
        u64::from_str_radix(&hex.replace('_', ""), 16).ok()?
    } else if let Some(bin) = mag.strip_prefix("0b").or_else(|| mag.strip_prefix("0B")) {
        u64::from_str_radix(&bin.replace('_', ""), 2).ok()?
    } else {
        if mag.is_empty() || !mag.bytes().all(|b| b.is_ascii_digit() || b == b'_') {
            return None;
        }
        mag.replace('_', "").parse::<u64>().ok()?
    };
    if neg {
        if value > 1u64 << 63 {
            return None;
        }
        Some((value as i64).wrapping_neg())
    } else {
        Some(value as i64)
    }
}

fn unescape(s: &str) -> Result<Vec<u8>, String> {
    let mut out = Vec::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            let mut buf = [0u8; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            continue;
        }
        match chars.next() {
            Some('n') => out.push(b'\n'),
            Some('t') => out.push(b'\t'),
            Some('r') => out.push(b'\r'),
            Some('0') => out.push(0),
            Some('\\') => out.push(b'\\'),
            Some('"') => out.push(b'"'),
            Some('\'') => out.push(b'\''),
            Some('x') => {
                let hex: String = chars.by_ref().take(2).collect();
                let b = u8::from_str_radix(&hex, 16).map_err(|_| format!("bad escape `\\x{hex}`"))?;
                out.push(b);
            }
            Some(other) => return Err(format!("unknown escape `\\{other}`")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out)
}

fn emit_data(directive: &str, args: &str, args_offset: usize, line: usize, data: &mut Vec<u8>) -> Result<(), AsmError> {
    let column = args_offset + 1 + (args.len() - args.trim_start().len());
    let trimmed = args.trim();
    if trimmed.is_empty() {
        return Err(AsmError::syntax(line, column, format!(".{directive} needs an argument")));
    }
    match directive {
        "ascii" => {
            let inner = trimmed
                .strip_prefix('"')
                .and_then(|t| t.strip_suffix('"'))
                .filter(|_| trimmed.len() >= 2)
                .ok_or_else(|| AsmError::syntax(line, column, ".ascii expects a quoted string"))?;
            let bytes = unescape(inner).map_err(|m| AsmError::syntax(line, column, m))?;
            data.extend_from_slice(&bytes);
        }
        _ => {
            for (text, col) in split_operands(&format!(" {args}"), args_offset.saturating_sub(1), line)? {
                let v = parse_int(&text)
                    .ok_or_else(|| AsmError::syntax(line, col, format!("bad integer `{text}`")))?;
                if directive == "byte" {
                    if !(-128..=255).contains(&v) {
                        return Err(AsmError::syntax(line, col, format!("byte value {v} out of range")));
                    }
                    data.push(v as u8);
                } else {
                    data.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
    }
    Ok(())
}
