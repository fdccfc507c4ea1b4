//! Text and JSON encodings of [`Polynomial`].
//!
//! Text form: `coef * x1^e1 x2^e2 ... xn^en` joined by `+`/`-`. The canonical
//! writer lists every variable (including zero exponents) so the dimension is
//! recoverable; the reader also accepts omitted variables, implicit unit
//! coefficients, `*` between factors and bare `xk`.

use super::{PolyError, Polynomial};
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    exps: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonPoly {
    dim: usize,
    terms: Vec<JsonTerm>,
}

fn fmt_coef(c: f64) -> String {
    let a = c.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{a}")
    } else {
        format!("{a:e}")
    }
}

impl Polynomial {
    /// Canonical text form; `parse_text` inverts it exactly.
    pub fn to_text(&self) -> String {
        let vars = |e: &[u32]| {
            e.iter()
                .enumerate()
                .map(|(i, k)| format!("x{}^{}", i + 1, k))
                .collect::<Vec<_>>()
                .join(" ")
        };
        if self.terms.is_empty() {
            return format!("0 * {}", vars(&vec![0; self.dim]));
        }
        let mut out = String::new();
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            let neg = c.is_sign_negative();
            match (idx, neg) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            out.push_str(&fmt_coef(*c));
            out.push_str(" * ");
            out.push_str(&vars(e));
        }
        out
    }

    /// Parse the text form. `dim` fixes the number of variables; when `None`
    /// it is the largest variable index that appears (at least 1).
    pub fn parse_text(src: &str, dim: Option<usize>) -> Result<Self, PolyError> {
        let raw = Parser { s: src.as_bytes(), pos: 0 }.poly()?;
        let max_var = raw.iter().flat_map(|(f, _)| f.iter().map(|(v, _)| *v)).max().unwrap_or(1);
        let dim = match dim {
            Some(d) if d < max_var => {
                return Err(PolyError::Parse {
                    pos: 0,
                    msg: format!("variable x{max_var} exceeds dimension {d}"),
                })
            }
            Some(d) => d,
            None => max_var,
        };
        let terms = raw.into_iter().map(|(factors, c)| {
            let mut e = vec![0u32; dim];
            for (v, k) in factors {
                e[v - 1] += k;
            }
            (e, c)
        });
        Self::new(dim, terms)
    }

    /// JSON form `{"dim": n, "terms": [{"exps": [...], "coef": c}, ...]}`.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(JsonPoly {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| JsonTerm { exps: e.clone(), coef: *c }).collect(),
        })
        .expect("polynomial json is always representable")
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }

    pub fn from_json_value(v: &serde_json::Value) -> Result<Self, PolyError> {
        let p: JsonPoly = serde_json::from_value(v.clone()).map_err(|e| PolyError::Json(e.to_string()))?;
        Self::new(p.dim, p.terms.into_iter().map(|t| (t.exps, t.coef)))
    }

    pub fn from_json(s: &str) -> Result<Self, PolyError> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| PolyError::Json(e.to_string()))?;
        Self::from_json_value(&v)
    }
}

/// Serialized as the JSON object form; deserializes from that form or from a
/// text-form string.
impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        JsonPoly {
            dim: self.dim,
            terms: self.terms.iter().map(|(e, c)| JsonTerm { exps: e.clone(), coef: *c }).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(de)?;
        let p = match &v {
            serde_json::Value::String(s) => Polynomial::parse_text(s, None),
            _ => Polynomial::from_json_value(&v),
        };
        p.map_err(serde::de::Error::custom)
    }
}

type RawTerm = (Vec<(usize, u32)>, f64);

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: &str) -> Result<T, PolyError> {
        Err(PolyError::Parse { pos: self.pos, msg: msg.to_string() })
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn poly(&mut self) -> Result<Vec<RawTerm>, PolyError> {
        let mut terms = Vec::new();
        self.ws();
        let mut sign = 1.0;
        if let Some(b @ (b'+' | b'-')) = self.peek() {
            sign = if b == b'-' { -1.0 } else { 1.0 };
            self.pos += 1;
        }
        loop {
            let (f, c) = self.term()?;
            terms.push((f, sign * c));
            self.ws();
            match self.peek() {
                None => break,
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                Some(_) => return self.err("expected '+' or '-'"),
            }
            self.pos += 1;
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<RawTerm, PolyError> {
        self.ws();
        let mut coef = 1.0;
        let mut seen = false;
        if matches!(self.peek(), Some(b'0'..=b'9' | b'.')) {
            coef = self.number()?;
            seen = true;
        }
        let mut factors = Vec::new();
        loop {
            self.ws();
            let save = self.pos;
            if self.peek() == Some(b'*') {
                self.pos += 1;
                self.ws();
            }
            if self.peek() == Some(b'x') {
                factors.push(self.factor()?);
                seen = true;
            } else {
                self.pos = save;
                break;
            }
        }
        if !seen {
            return self.err("expected a coefficient or a variable");
        }
        Ok((factors, coef))
    }

    fn digits(&mut self) -> &[u8] {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        &self.s[start..self.pos]
    }

    fn number(&mut self) -> Result<f64, PolyError> {
        let start = self.pos;
        self.digits();
        if self.peek() == Some(b'.') {
            self.pos += 1;
            self.digits();
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits().is_empty() {
                return self.err("malformed exponent");
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii slice");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err("malformed number")
            }
        }
    }

    fn factor(&mut self) -> Result<(usize, u32), PolyError> {
        self.pos += 1;
        let idx = std::str::from_utf8(self.digits()).expect("ascii digits").to_string();
        let var: usize = match idx.parse() {
            Ok(v) if v >= 1 => v,
            _ => return self.err("variable index must be a positive integer"),
        };
        let mut exp = 1;
        self.ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.ws();
            let d = std::str::from_utf8(self.digits()).expect("ascii digits").to_string();
            exp = match d.parse() {
                Ok(e) => e,
                Err(_) => return self.err("exponent must be a non-negative integer"),
            };
        }
        Ok((var, exp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_reader_variants() {
        let p = Polynomial::parse_text("x1^2 + x2^4 - 1.9*x1*x2^2", None).unwrap();
        assert_eq!(p, super::super::a3_counterexample(1.9, 0));
        let q = Polynomial::parse_text("  -2.5e-3 * x3 ^ 2 + 4", Some(4)).unwrap();
        assert_eq!(q.dim(), 4);
        assert_eq!(q.terms(), &[(vec![0, 0, 2, 0], -2.5e-3), (vec![0, 0, 0, 0], 4.0)]);
        assert!(Polynomial::parse_text("x1 +", None).is_err());
        assert!(Polynomial::parse_text("x5", Some(2)).is_err());
        assert!(Polynomial::parse_text("1e999 * x1", None).is_err());
    }

    #[test]
    fn canonical_text_round_trip() {
        let p = Polynomial::new(3, [(vec![1, 0, 2], -1e-9), (vec![0, 0, 0], 0.1 + 0.2), (vec![4, 0, 0], 3e20)]).unwrap();
        let text = p.to_text();
        assert_eq!(Polynomial::parse_text(&text, None).unwrap(), p);
        let z = Polynomial::zero(4).unwrap();
        assert_eq!(Polynomial::parse_text(&z.to_text(), None).unwrap(), z);
    }

    #[test]
    fn json_round_trip() {
        let p = super::super::a3_counterexample(1.9, 2);
        let back = Polynomial::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
        assert!(Polynomial::from_json(r#"{"dim": 2, "terms": [{"exps": [1], "coef": 1.0}]}"#).is_err());
    }
}
