//! Rotation angles: a constant in radians plus a linear combination of named
//! parameters, so a synthesized circuit can be re-bound to new values.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Neg};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Tolerance for comparing numeric angles.
pub const ANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("bad angle expression `{text}`: {reason}")]
pub struct AngleParseError {
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Angle {
    constant: f64,
    params: BTreeMap<String, f64>,
}

/// Reduces `x` into `[0, 2π)`.
pub fn wrap_tau(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Distance between two angles on the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_tau(a - b);
    d.min(TAU - d)
}

impl Angle {
    pub fn radians(value: f64) -> Self {
        Angle {
            constant: value,
            params: BTreeMap::new(),
        }
    }

    pub fn param(name: impl Into<String>) -> Self {
        let mut params = BTreeMap::new();
        params.insert(name.into(), 1.0);
        Angle {
            constant: 0.0,
            params,
        }
    }

    pub fn zero() -> Self {
        Angle::default()
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn is_symbolic(&self) -> bool {
        !self.params.is_empty()
    }

    /// True when the angle is a numeric multiple of 2π (an identity rotation).
    pub fn is_zero(&self) -> bool {
        !self.is_symbolic() && circular_distance(self.constant, 0.0) < ANGLE_EPS
    }

    pub fn scale(&self, factor: f64) -> Angle {
        let mut out = Angle::radians(self.constant * factor);
        for (k, v) in &self.params {
            out.params.insert(k.clone(), v * factor);
        }
        out.prune();
        out
    }

    /// Constant reduced into `[0, 2π)`; parameter coefficients untouched.
    pub fn normalized(&self) -> Angle {
        let mut out = self.clone();
        out.constant = wrap_tau(out.constant);
        out
    }

    /// Equality up to [`ANGLE_EPS`], with the constant compared modulo 2π.
    pub fn approx_eq(&self, other: &Angle) -> bool {
        if circular_distance(self.constant, other.constant) >= ANGLE_EPS {
            return false;
        }
        self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|((ka, va), (kb, vb))| ka == kb && (va - vb).abs() < ANGLE_EPS)
    }

    /// Substitutes parameter values; unknown parameters stay symbolic.
    pub fn bind(&self, values: &BTreeMap<String, f64>) -> Angle {
        let mut out = Angle::radians(self.constant);
        for (k, c) in &self.params {
            match values.get(k) {
                Some(v) => out.constant += c * v,
                None => {
                    out.params.insert(k.clone(), *c);
                }
            }
        }
        out
    }

    fn prune(&mut self) {
        self.params.retain(|_, c| c.abs() >= ANGLE_EPS);
    }

    pub fn parse(text: &str) -> Result<Angle, AngleParseError> {
        let mut p = ExprParser {
            text,
            chars: text.char_indices().peekable(),
        };
        let value = p.expr()?;
        p.skip_ws();
        if let Some(&(_, c)) = p.chars.peek() {
            return Err(p.error(format!("unexpected `{c}`")));
        }
        Ok(value)
    }
}

impl Add for Angle {
    type Output = Angle;

    fn add(mut self, rhs: Angle) -> Angle {
        self.constant += rhs.constant;
        for (k, v) in rhs.params {
            *self.params.entry(k).or_insert(0.0) += v;
        }
        self.prune();
        self
    }
}

impl Neg for Angle {
    type Output = Angle;

    fn neg(self) -> Angle {
        self.scale(-1.0)
    }
}

impl From<f64> for Angle {
    fn from(value: f64) -> Self {
        Angle::radians(value)
    }
}

fn fmt_number(x: f64) -> String {
    // Debug keeps the shortest round-trip representation and a decimal point.
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if self.constant != 0.0 || self.params.is_empty() {
            f.write_str(&fmt_number(self.constant))?;
            first = false;
        }
        for (name, &c) in &self.params {
            let sign = if c < 0.0 { "-" } else { "+" };
            if !(first && sign == "+") {
                f.write_str(sign)?;
            }
            first = false;
            let mag = c.abs();
            if mag == 1.0 {
                f.write_str(name)?;
            } else {
                write!(f, "{}*{name}", fmt_number(mag))?;
            }
        }
        Ok(())
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_symbolic() {
            s.serialize_str(&self.to_string())
        } else {
            s.serialize_f64(self.constant)
        }
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Angle::radians(v)),
            Raw::Text(t) => Angle::parse(&t).map_err(serde::de::Error::custom),
        }
    }
}

struct ExprParser<'a> {
    text: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
}

impl ExprParser<'_> {
    fn error(&self, reason: impl Into<String>) -> AngleParseError {
        AngleParseError {
            text: self.text.to_string(),
            reason: reason.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn expr(&mut self) -> Result<Angle, AngleParseError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.chars.peek().map(|&(_, c)| c) {
                Some('+') => {
                    self.chars.next();
                    acc = acc + self.term()?;
                }
                Some('-') => {
                    self.chars.next();
                    acc = acc + -self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Angle, AngleParseError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.chars.peek().map(|&(_, c)| c) {
                Some('*') => {
                    self.chars.next();
                    let rhs = self.factor()?;
                    acc = match (acc.is_symbolic(), rhs.is_symbolic()) {
                        (false, _) => rhs.scale(acc.constant),
                        (true, false) => acc.scale(rhs.constant),
                        (true, true) => return Err(self.error("product of two parameters")),
                    };
                }
                Some('/') => {
                    self.chars.next();
                    let rhs = self.factor()?;
                    if rhs.is_symbolic() {
                        return Err(self.error("division by a parameter"));
                    }
                    if rhs.constant == 0.0 {
                        return Err(self.error("division by zero"));
                    }
                    acc = acc.scale(1.0 / rhs.constant);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Angle, AngleParseError> {
        self.skip_ws();
        let Some(&(start, c)) = self.chars.peek() else {
            return Err(self.error("unexpected end of expression"));
        };
        match c {
            '-' => {
                self.chars.next();
                Ok(-self.factor()?)
            }
            '+' => {
                self.chars.next();
                self.factor()
            }
            '(' => {
                self.chars.next();
                let inner = self.expr()?;
                self.skip_ws();
                match self.chars.next() {
                    Some((_, ')')) => Ok(inner),
                    _ => Err(self.error("missing `)`")),
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut end = start;
                let mut prev = ' ';
                while let Some(&(i, ch)) = self.chars.peek() {
                    let exp_sign = (ch == '+' || ch == '-') && (prev == 'e' || prev == 'E');
                    if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                        end = i + ch.len_utf8();
                        prev = ch;
                        self.chars.next();
                    } else {
                        break;
                    }
                }
                let lit = &self.text[start..end];
                lit.parse::<f64>()
                    .map(Angle::radians)
                    .map_err(|_| self.error(format!("bad number `{lit}`")))
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut end = start;
                while let Some(&(i, ch)) = self.chars.peek() {
                    if ch.is_alphanumeric() || ch == '_' {
                        end = i + ch.len_utf8();
                        self.chars.next();
                    } else {
                        break;
                    }
                }
                let ident = &self.text[start..end];
                Ok(if ident == "pi" {
                    Angle::radians(PI)
                } else {
                    Angle::param(ident)
                })
            }
            other => Err(self.error(format!("unexpected `{other}`"))),
        }
    }
}
