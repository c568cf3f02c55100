//! The dynamic value universe shared by local computations and channels,
//! plus the response-arity descriptors used at operation boundaries.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Everything a local computation can produce and everything that crosses a
/// channel.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Unit,
    Bool(bool),
    Int(i64),
    Str(String),
    Pair(Box<Value>, Box<Value>),
    List(Vec<Value>),
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Short name of the variant, used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Unit => "unit",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Str(_) => "string",
            Value::Pair(..) => "pair",
            Value::List(_) => "list",
        }
    }

    /// Nesting depth; scalars have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Value::Pair(a, b) => 1 + a.depth().max(b.depth()),
            Value::List(vs) => 1 + vs.iter().map(Value::depth).max().unwrap_or(0),
            _ => 0,
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.into())
    }
}

impl From<()> for Value {
    fn from(_: ()) -> Self {
        Value::Unit
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Pair(a, b) => write!(f, "(pair {a} {b})"),
            Value::List(vs) => {
                f.write_str("[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Response arity of an operation: the domain of values a handler may
/// answer with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arity {
    Unit,
    Bool,
    Int,
    Str,
    /// Any value at all.
    Value,
}

/// Integers used when an `Int` arity must be enumerated.
pub const INT_DOMAIN: [i64; 4] = [0, 1, 2, 3];
/// Strings used when a `Str` arity must be enumerated.
pub const STR_DOMAIN: [&str; 2] = ["a", "b"];

impl Arity {
    pub fn accepts(self, v: &Value) -> bool {
        matches!(
            (self, v),
            (Arity::Value, _)
                | (Arity::Unit, Value::Unit)
                | (Arity::Bool, Value::Bool(_))
                | (Arity::Int, Value::Int(_))
                | (Arity::Str, Value::Str(_))
        )
    }

    /// The finite checking domain for this arity: unit = {()}, bool =
    /// {false, true}, int = {0..3}, string = {"a", "b"}, and the union of
    /// those for `Value`.
    pub fn domain(self) -> Vec<Value> {
        match self {
            Arity::Unit => vec![Value::Unit],
            Arity::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Arity::Int => INT_DOMAIN.iter().copied().map(Value::Int).collect(),
            Arity::Str => STR_DOMAIN.iter().map(|s| Value::str(*s)).collect(),
            Arity::Value => [Arity::Unit, Arity::Bool, Arity::Int, Arity::Str]
                .into_iter()
                .flat_map(Arity::domain)
                .collect(),
        }
    }

    /// First element of the checking domain.
    pub fn default_value(self) -> Value {
        match self {
            Arity::Unit | Arity::Value => Value::Unit,
            Arity::Bool => Value::Bool(false),
            Arity::Int => Value::Int(0),
            Arity::Str => Value::str(STR_DOMAIN[0]),
        }
    }

    /// The tightest descriptor that accepts `v`.
    pub fn of(v: &Value) -> Arity {
        match v {
            Value::Unit => Arity::Unit,
            Value::Bool(_) => Arity::Bool,
            Value::Int(_) => Arity::Int,
            Value::Str(_) => Arity::Str,
            Value::Pair(..) | Value::List(_) => Arity::Value,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Arity::Unit => "unit",
            Arity::Bool => "bool",
            Arity::Int => "int",
            Arity::Str => "string",
            Arity::Value => "value",
        }
    }

    pub fn from_name(name: &str) -> Option<Arity> {
        Some(match name {
            "unit" => Arity::Unit,
            "bool" => Arity::Bool,
            "int" => Arity::Int,
            "string" | "str" => Arity::Str,
            "value" | "any" => Arity::Value,
            _ => return None,
        })
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
