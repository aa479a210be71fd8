//! Line-oriented text form of IR modules.
//!
//! ```text
//! var int i i
//! loop valid l.preheader l.header l.cond l.body l.latch l.exit l.after %2 %0
//! block entry:
//!   %0 = const uint 4
//!   jump l.preheader
//! ```
//!
//! Variable lines give type, unique name and environment name. Loop lines
//! list the seven skeleton blocks by label (`-` for a removed block), then
//! the induction variable and trip count. Every block ends in exactly one
//! terminator: `jump`, `br` or `halt`. The first block is the entry
//! unless another one is marked `block <label>: entry`.

use std::collections::HashMap;
use std::fmt::Write;

use loomp_core::ir::{BasicBlock, BinOp, BlockId, CanonicalLoopInfo, CmpPred, Inst, IrModule, IrVar, Op, Terminator, ValueId, VarId};
use loomp_core::IntType;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct IrParseError {
    pub line: usize,
    pub message: String,
}

const BIN_OPS: [BinOp; 7] = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::UDiv, BinOp::URem, BinOp::SDiv, BinOp::SRem];

/// Prints `m`, compacting a copy first if it still holds discarded blocks.
pub fn print_ir(m: &IrModule) -> String {
    if !m.is_compact() {
        let mut c = m.clone();
        c.compact();
        return print_ir(&c);
    }
    let label = |b: BlockId| if m.has_block(b) { m.block(b).label.as_str() } else { "-" };
    let mut out = String::new();
    for v in &m.vars {
        writeln!(out, "var {} {} {}", v.ty, v.name, v.source).unwrap();
    }
    for l in &m.loops {
        let state = if l.valid { "valid" } else { "invalid" };
        write!(out, "loop {state}").unwrap();
        for b in l.blocks() {
            write!(out, " {}", label(b)).unwrap();
        }
        writeln!(out, " %{} %{}", l.indvar.0, l.trip_count.0).unwrap();
    }
    let var = |v: VarId| m.vars[v.0 as usize].name.as_str();
    for (i, b) in m.blocks.iter().enumerate() {
        if BlockId(i as u32) == m.entry && i != 0 {
            writeln!(out, "block {}: entry", b.label).unwrap();
        } else {
            writeln!(out, "block {}:", b.label).unwrap();
        }
        for inst in &b.insts {
            out.push_str("  ");
            match inst {
                Inst::Def { result, ty, op } => {
                    write!(out, "%{} = ", result.0).unwrap();
                    match op {
                        Op::Const(c) => write!(out, "const {ty} {c}"),
                        Op::Bin(o, a, b) => write!(out, "{} {ty} %{}, %{}", o.mnemonic(), a.0, b.0),
                        Op::Cmp(p, a, b) => write!(out, "{} {ty} %{}, %{}", p.mnemonic(), a.0, b.0),
                        Op::Select(c, a, b) => write!(out, "select {ty} %{}, %{}, %{}", c.0, a.0, b.0),
                        Op::Cast(a) => write!(out, "cast {ty} %{}", a.0),
                        Op::Load(v) => write!(out, "load {ty} {}", var(*v)),
                        Op::Phi(inc) => {
                            let parts: Vec<String> = inc.iter().map(|(p, v)| format!("[{}, %{}]", label(*p), v.0)).collect();
                            write!(out, "phi {ty} {}", parts.join(", "))
                        }
                    }
                    .unwrap();
                }
                Inst::Store { var: v, value } => write!(out, "store {}, %{}", var(*v), value.0).unwrap(),
                Inst::CallBody { args, thread } => {
                    let args: Vec<String> = args.iter().map(|a| format!("%{}", a.0)).collect();
                    write!(out, "call body({})", args.join(", ")).unwrap();
                    if let Some(t) = thread {
                        write!(out, " thread %{}", t.0).unwrap();
                    }
                }
            }
            out.push('\n');
        }
        match &b.term {
            Some(Terminator::Jump(t)) => writeln!(out, "  jump {}", label(*t)).unwrap(),
            Some(Terminator::Branch { cond, then, otherwise }) => {
                writeln!(out, "  br %{}, {}, {}", cond.0, label(*then), label(*otherwise)).unwrap()
            }
            Some(Terminator::Halt) => out.push_str("  halt\n"),
            None => {}
        }
    }
    out
}

struct Parser<'a> {
    line: usize,
    blocks: HashMap<&'a str, BlockId>,
    vars: HashMap<&'a str, VarId>,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> IrParseError {
        IrParseError { line: self.line, message: message.into() }
    }

    fn block(&self, s: &str) -> Result<BlockId, IrParseError> {
        if s == "-" {
            return Ok(BlockId(u32::MAX));
        }
        self.blocks.get(s).copied().ok_or_else(|| self.err(format!("unknown block '{s}'")))
    }

    fn value(&self, s: &str) -> Result<ValueId, IrParseError> {
        s.trim()
            .strip_prefix('%')
            .and_then(|n| n.parse().ok())
            .map(ValueId)
            .ok_or_else(|| self.err(format!("expected a value like %3, found '{}'", s.trim())))
    }

    fn values(&self, s: &str, n: usize) -> Result<Vec<ValueId>, IrParseError> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != n {
            return Err(self.err(format!("expected {n} operands")));
        }
        parts.into_iter().map(|p| self.value(p)).collect()
    }

    fn ty(&self, s: &str) -> Result<IntType, IrParseError> {
        IntType::from_keyword(s).ok_or_else(|| self.err(format!("unknown type '{s}'")))
    }

    fn var(&self, s: &str) -> Result<VarId, IrParseError> {
        self.vars.get(s.trim()).copied().ok_or_else(|| self.err(format!("unknown variable '{}'", s.trim())))
    }

    fn def(&self, text: &str) -> Result<Inst, IrParseError> {
        let (lhs, rhs) = text.split_once(" = ").ok_or_else(|| self.err("expected '%n = ...'"))?;
        let result = self.value(lhs)?;
        let mut words = rhs.splitn(3, ' ');
        let op = words.next().unwrap_or("");
        let ty = self.ty(words.next().ok_or_else(|| self.err("missing type"))?)?;
        let rest = words.next().unwrap_or("");
        let op = if let Some(b) = BIN_OPS.iter().find(|b| b.mnemonic() == op) {
            let v = self.values(rest, 2)?;
            Op::Bin(*b, v[0], v[1])
        } else if let Some(p) = CmpPred::ALL.iter().find(|p| p.mnemonic() == op) {
            let v = self.values(rest, 2)?;
            Op::Cmp(*p, v[0], v[1])
        } else {
            match op {
                "const" => Op::Const(rest.trim().parse().map_err(|_| self.err(format!("bad constant '{rest}'")))?),
                "select" => {
                    let v = self.values(rest, 3)?;
                    Op::Select(v[0], v[1], v[2])
                }
                "cast" => Op::Cast(self.value(rest)?),
                "load" => Op::Load(self.var(rest)?),
                "phi" => {
                    let mut inc = Vec::new();
                    for part in rest.split("], ").filter(|p| !p.trim().is_empty()) {
                        let part = part.trim().trim_start_matches('[').trim_end_matches(']');
                        let (b, v) = part.split_once(", ").ok_or_else(|| self.err("expected '[block, %v]'"))?;
                        inc.push((self.block(b)?, self.value(v)?));
                    }
                    Op::Phi(inc)
                }
                other => return Err(self.err(format!("unknown operation '{other}'"))),
            }
        };
        Ok(Inst::Def { result, ty, op })
    }

    fn inst(&self, text: &str) -> Result<Inst, IrParseError> {
        if let Some(rest) = text.strip_prefix("store ") {
            let (v, x) = rest.split_once(',').ok_or_else(|| self.err("expected 'store var, %v'"))?;
            return Ok(Inst::Store { var: self.var(v)?, value: self.value(x)? });
        }
        if let Some(rest) = text.strip_prefix("call body(") {
            let (args, tail) = rest.split_once(')').ok_or_else(|| self.err("unclosed call"))?;
            let args = if args.trim().is_empty() { Vec::new() } else { args.split(',').map(|a| self.value(a)).collect::<Result<_, _>>()? };
            let thread = match tail.trim() {
                "" => None,
                t => Some(self.value(t.strip_prefix("thread").ok_or_else(|| self.err("expected 'thread %v'"))?)?),
            };
            return Ok(Inst::CallBody { args, thread });
        }
        self.def(text)
    }

    fn term(&self, text: &str) -> Result<Option<Terminator>, IrParseError> {
        if text == "halt" {
            return Ok(Some(Terminator::Halt));
        }
        if let Some(t) = text.strip_prefix("jump ") {
            return Ok(Some(Terminator::Jump(self.block(t.trim())?)));
        }
        if let Some(rest) = text.strip_prefix("br ") {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            let [c, t, o] = parts[..] else { return Err(self.err("expected 'br %c, then, else'")) };
            return Ok(Some(Terminator::Branch { cond: self.value(c)?, then: self.block(t)?, otherwise: self.block(o)? }));
        }
        Ok(None)
    }
}

/// Parses the text produced by [`print_ir`].
pub fn parse_ir(text: &str) -> Result<IrModule, IrParseError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect();
    let mut p = Parser { line: 0, blocks: HashMap::new(), vars: HashMap::new() };

    // Collect block labels first.
    let mut entry = None;
    let mut labels = Vec::new();
    for (n, l) in &lines {
        if let Some(rest) = l.strip_prefix("block ") {
            p.line = *n;
            let (label, tail) = rest.split_once(':').ok_or_else(|| p.err("expected 'block <label>:'"))?;
            let id = BlockId(labels.len() as u32);
            if p.blocks.insert(label, id).is_some() {
                return Err(p.err(format!("duplicate block '{label}'")));
            }
            match tail.trim() {
                "" => {}
                "entry" => entry = Some(id),
                other => return Err(p.err(format!("unexpected '{other}' after block label"))),
            }
            labels.push(label);
        }
    }

    let mut vars = Vec::new();
    let mut loops = Vec::new();
    let mut blocks: Vec<BasicBlock> = Vec::new();
    for (n, l) in &lines {
        p.line = *n;
        if let Some(rest) = l.strip_prefix("var ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [ty, name, source] = parts[..] else { return Err(p.err("expected 'var <type> <name> <source>'")) };
            let ty = p.ty(ty)?;
            if p.vars.insert(name, VarId(vars.len() as u32)).is_some() {
                return Err(p.err(format!("duplicate variable '{name}'")));
            }
            vars.push(IrVar { name: name.into(), source: source.into(), ty });
        } else if let Some(rest) = l.strip_prefix("loop ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 10 {
                return Err(p.err("expected 'loop <state>', seven blocks, indvar and trip count"));
            }
            let valid = match parts[0] {
                "valid" => true,
                "invalid" => false,
                s => return Err(p.err(format!("unknown loop state '{s}'"))),
            };
            let b: Vec<BlockId> = parts[1..8].iter().map(|s| p.block(s)).collect::<Result<_, _>>()?;
            loops.push(CanonicalLoopInfo {
                preheader: b[0],
                header: b[1],
                cond: b[2],
                body_entry: b[3],
                latch: b[4],
                exit: b[5],
                after: b[6],
                indvar: p.value(parts[8])?,
                trip_count: p.value(parts[9])?,
                valid,
            });
        } else if l.starts_with("block ") {
            if let Some(prev) = blocks.last() {
                if prev.term.is_none() {
                    return Err(p.err(format!("block '{}' has no terminator", prev.label)));
                }
            }
            blocks.push(BasicBlock { label: labels[blocks.len()].into(), insts: Vec::new(), term: None });
        } else {
            let Some(b) = blocks.last_mut() else { return Err(p.err("instruction outside of a block")) };
            if b.term.is_some() {
                return Err(p.err(format!("instruction after the terminator of block '{}'", b.label)));
            }
            match p.term(l)? {
                Some(t) => b.term = Some(t),
                None => b.insts.push(p.inst(l)?),
            }
        }
    }
    if let Some(last) = blocks.last() {
        if last.term.is_none() {
            p.line = lines.last().map_or(0, |(n, _)| *n);
            return Err(p.err(format!("block '{}' has no terminator", last.label)));
        }
    }
    let entry = entry.or(if blocks.is_empty() { None } else { Some(BlockId(0)) }).ok_or_else(|| p.err("module has no blocks"))?;
    Ok(IrModule::from_parts(blocks, entry, vars, loops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use loomp_core::ir::create_canonical_loop;

    fn skeleton() -> IrModule {
        let mut m = IrModule::new();
        let entry = m.entry;
        let n = m.konst(entry, IntType::UINT, 4);
        let l = create_canonical_loop(&mut m, entry, n, "omp.loop", |m, body, iv| {
            m.call_body(body, vec![iv], None);
            Ok(body)
        })
        .unwrap();
        let after = m.loop_info(l).unwrap().after;
        m.terminate(after, Terminator::Halt);
        m
    }

    #[test]
    fn minimal_module_is_two_lines() {
        let mut m = IrModule::new();
        let e = m.entry;
        m.terminate(e, Terminator::Halt);
        assert_eq!(print_ir(&m), "block entry:\n  halt\n");
    }

    #[test]
    fn skeleton_text_names_every_block() {
        let text = print_ir(&skeleton());
        for part in ["preheader", "header", "cond", "body", "latch", "exit", "after"] {
            assert!(text.contains(&format!("block omp.loop.{part}:")), "{part}\n{text}");
        }
        assert!(text.contains("icmp.ult int"));
    }

    #[test]
    fn round_trip() {
        let m = skeleton();
        let back = parse_ir(&print_ir(&m)).unwrap();
        assert!(back.structurally_equal(&m));
        assert_eq!(print_ir(&back), print_ir(&m));
    }

    #[test]
    fn missing_terminator_names_the_block() {
        let text = print_ir(&skeleton()).replace("  jump omp.loop.cond\nblock omp.loop.cond:", "block omp.loop.cond:");
        let e = parse_ir(&text).unwrap_err();
        assert!(e.message.contains("'omp.loop.header' has no terminator"), "{e}");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_ir("block entry:\n  %0 = frob int %1\n  halt\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_ir("block entry:\n  jump nowhere\n").is_err());
        assert!(parse_ir("").is_err());
    }
}
