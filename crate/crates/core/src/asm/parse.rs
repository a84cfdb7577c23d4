use crate::isa::{Reg, VReg};

use super::{AsmErrorKind, Res};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    /// Lower-cased mnemonic or directive (with its leading dot).
    pub name: String,
    pub operands: Vec<String>,
}

pub fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$')
}

/// Decimal or `0x` hex, with an optional leading minus.
pub fn parse_int(text: &str) -> Option<i64> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let value = match body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        Some(hex) if !hex.is_empty() && !hex.starts_with(['+', '-']) => i64::from_str_radix(hex, 16).ok()?,
        Some(_) => return None,
        None if !body.is_empty() && body.bytes().all(|b| b.is_ascii_digit()) => body.parse().ok()?,
        None => return None,
    };
    Some(if neg { -value } else { value })
}

const ABI_NAMES: [&str; 32] = [
    "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "s2",
    "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11", "t3", "t4", "t5", "t6",
];

pub fn parse_reg(text: &str) -> Res<Reg> {
    let lower = text.to_ascii_lowercase();
    let index = match lower.strip_prefix('x').and_then(|n| n.parse::<u32>().ok()) {
        Some(n) if n < 32 && !lower[1..].starts_with('+') => Some(n),
        _ if lower == "fp" => Some(8),
        _ => ABI_NAMES.iter().position(|&n| n == lower).map(|i| i as u32),
    };
    match index {
        Some(i) => Ok(Reg::new(i).expect("index checked")),
        None => Err(AsmErrorKind::Syntax(format!("expected a base register, found `{text}`"))),
    }
}

pub fn parse_vreg(text: &str) -> Res<VReg> {
    let lower = text.to_ascii_lowercase();
    match lower.strip_prefix('v').and_then(|n| n.parse::<u32>().ok()) {
        Some(n) if n < VReg::COUNT as u32 && lower[1..].bytes().all(|b| b.is_ascii_digit()) => {
            Ok(VReg::new(n).expect("index checked"))
        }
        _ => Err(AsmErrorKind::Syntax(format!("expected a vector register v0..v7, found `{text}`"))),
    }
}

/// `offset(reg)` or `(reg)`; the offset may be a number or a label.
pub fn parse_mem_operand(text: &str, value: impl Fn(&str) -> Res<i64>) -> Res<(i64, Reg)> {
    let bad = || AsmErrorKind::Syntax(format!("expected `offset(register)`, found `{text}`"));
    let open = text.find('(').ok_or_else(bad)?;
    let inner = text[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let offset_text = text[..open].trim();
    let offset = if offset_text.is_empty() { 0 } else { value(offset_text)? };
    Ok((offset, parse_reg(inner.trim())?))
}

/// An IORW set such as `iorw`, `rw` or `0`.
pub fn fence_set(text: &str) -> Res<u8> {
    if text == "0" {
        return Ok(0);
    }
    let mut set = 0u8;
    for c in text.chars() {
        let bit = match c {
            'i' => 8,
            'o' => 4,
            'r' => 2,
            'w' => 1,
            _ => return Err(AsmErrorKind::Syntax(format!("bad fence set `{text}`"))),
        };
        set |= bit;
    }
    Ok(set)
}

/// Contents of a double-quoted string with `\n`, `\t`, `\0`, `\\` and `\"` escapes.
pub fn string_literal(text: &str) -> Res<Vec<u8>> {
    let bad = |m: &str| AsmErrorKind::Syntax(format!("{m} in string literal {text}"));
    let body = text
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .ok_or_else(|| bad("missing quotes"))?;
    let mut out = Vec::with_capacity(body.len());
    let mut chars = body.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            let mut buf = [0; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            continue;
        }
        out.push(match chars.next() {
            Some('n') => b'\n',
            Some('t') => b'\t',
            Some('0') => 0,
            Some('\\') => b'\\',
            Some('"') => b'"',
            _ => return Err(bad("bad escape")),
        });
    }
    Ok(out)
}

/// Drops a `#` comment, ignoring `#` inside string literals.
fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_string => escaped = true,
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn split_operands(text: &str) -> Res<Vec<String>> {
    let mut ops = Vec::new();
    let mut current = String::new();
    let mut in_string = false;
    let mut escaped = false;
    for c in text.chars() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_string => escaped = true,
            '"' => in_string = !in_string,
            ',' if !in_string => {
                ops.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    ops.push(current);
    let ops: Vec<String> = ops.into_iter().map(|s| s.trim().to_string()).collect();
    if ops.len() == 1 && ops[0].is_empty() {
        return Ok(Vec::new());
    }
    if ops.iter().any(String::is_empty) {
        return Err(AsmErrorKind::Syntax("empty operand".into()));
    }
    Ok(ops)
}

/// Splits a source line into its labels and optional statement.
pub fn parse_line(raw: &str) -> Res<(Vec<String>, Option<Statement>)> {
    let mut rest = strip_comment(raw).trim();
    let mut labels = Vec::new();
    while let Some(colon) = rest.find(':') {
        let name = rest[..colon].trim();
        if !is_identifier(name) {
            break;
        }
        labels.push(name.to_string());
        rest = rest[colon + 1..].trim_start();
    }
    if rest.is_empty() {
        return Ok((labels, None));
    }
    let (name, operands) = match rest.find(char::is_whitespace) {
        Some(i) => (&rest[..i], rest[i..].trim()),
        None => (rest, ""),
    };
    let stmt = Statement { name: name.to_ascii_lowercase(), operands: split_operands(operands)? };
    Ok((labels, Some(stmt)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integers() {
        assert_eq!(parse_int("42"), Some(42));
        assert_eq!(parse_int("-0x10"), Some(-16));
        assert_eq!(parse_int("0xFFFFFFFF"), Some(0xffff_ffff));
        assert_eq!(parse_int("0x"), None);
        assert_eq!(parse_int("x1"), None);
        assert_eq!(parse_int("1a"), None);
    }

    #[test]
    fn registers() {
        assert_eq!(parse_reg("x31").unwrap().index(), 31);
        assert_eq!(parse_reg("a0").unwrap().index(), 10);
        assert_eq!(parse_reg("fp").unwrap().index(), 8);
        assert_eq!(parse_reg("zero").unwrap().index(), 0);
        assert!(parse_reg("x32").is_err());
        assert!(parse_reg("v1").is_err());
        assert_eq!(parse_vreg("v7").unwrap().index(), 7);
        assert!(parse_vreg("v8").is_err());
    }

    #[test]
    fn lines() {
        let (labels, stmt) = parse_line("a: b:  lw x1, 4(sp)  # load").unwrap();
        assert_eq!(labels, ["a", "b"]);
        let stmt = stmt.unwrap();
        assert_eq!(stmt.name, "lw");
        assert_eq!(stmt.operands, ["x1", "4(sp)"]);
        let (_, stmt) = parse_line(r#".asciz "a, #b""#).unwrap();
        assert_eq!(stmt.unwrap().operands, [r#""a, #b""#]);
        assert_eq!(parse_line("   # only a comment").unwrap(), (vec![], None));
        assert!(parse_line("add x1,, x2").is_err());
    }

    #[test]
    fn memory_operands() {
        let num = |t: &str| parse_int(t).ok_or(AsmErrorKind::Syntax(t.into()));
        assert_eq!(parse_mem_operand("-8(x2)", num).unwrap(), (-8, Reg::SP));
        assert_eq!(parse_mem_operand("(a0)", num).unwrap(), (0, Reg::A0));
        assert!(parse_mem_operand("8", num).is_err());
    }
}
