//! Instruction traces.

use std::fmt;
use std::sync::Arc;

use crate::classifier::InstructionClass;
use crate::isa::Opcode;

/// Mnemonic of a traced instruction: either a mini-ISA opcode or a foreign
/// mnemonic read from an ingested trace file.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Mnemonic {
    Isa(Opcode),
    Foreign(Arc<str>),
}

impl Mnemonic {
    pub fn as_str(&self) -> &str {
        match self {
            Mnemonic::Isa(op) => op.name(),
            Mnemonic::Foreign(s) => s,
        }
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One retired instruction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    /// Program index for VM traces, record index for ingested traces.
    pub index: usize,
    pub mnemonic: Mnemonic,
    pub class: InstructionClass,
}

/// Ordered sequence of retired instructions.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Trace {
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: TraceEvent) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TraceEvent> {
        self.events.iter()
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &Trace) -> Trace {
        let mut events = Vec::with_capacity(self.len() + other.len());
        events.extend_from_slice(&self.events);
        events.extend_from_slice(&other.events);
        Trace { events }
    }
}

impl From<Vec<TraceEvent>> for Trace {
    fn from(events: Vec<TraceEvent>) -> Self {
        Trace { events }
    }
}

impl FromIterator<TraceEvent> for Trace {
    fn from_iter<I: IntoIterator<Item = TraceEvent>>(iter: I) -> Self {
        Trace { events: iter.into_iter().collect() }
    }
}

impl<'a> IntoIterator for &'a Trace {
    type Item = &'a TraceEvent;
    type IntoIter = std::slice::Iter<'a, TraceEvent>;

    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}
