//! Terminal and function symbol sets.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A value domain an expression can be evaluated over.
pub trait Value: Copy + PartialEq + Send + Sync + fmt::Debug + 'static {
    /// `false` for results that must be treated as an evaluation exception.
    fn is_valid(&self) -> bool {
        true
    }
}

impl Value for f64 {
    fn is_valid(&self) -> bool {
        self.is_finite()
    }
}

impl Value for i64 {}

impl Value for u8 {}

/// How a function application is rendered as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Notation {
    /// `(lhs<symbol>rhs)`; binary functions only.
    Infix(String),
    /// `name(arg, ...)`.
    Prefix,
}

type Evaluator<V> = Arc<dyn Fn(&[V]) -> Option<V> + Send + Sync>;
type BatchEvaluator<V> = Arc<dyn Fn(&[&[V]], &mut Vec<V>) -> std::result::Result<(), usize> + Send + Sync>;

/// A function symbol. The evaluator returns `None` when the application
/// raises an exception (for example a division by zero).
#[derive(Clone)]
pub struct Function<V> {
    pub name: String,
    pub arity: usize,
    pub notation: Notation,
    eval: Evaluator<V>,
    batch: BatchEvaluator<V>,
}

/// Upper bound on function arity.
pub const MAX_FUNCTION_ARITY: usize = 3;

impl<V: Value> Function<V> {
    pub fn new<F>(name: impl Into<String>, arity: usize, notation: Notation, eval: F) -> Self
    where
        F: Fn(&[V]) -> Option<V> + Send + Sync + Clone + 'static,
    {
        assert!(arity <= MAX_FUNCTION_ARITY, "arity above {MAX_FUNCTION_ARITY}");
        let scalar = eval.clone();
        let batch = move |columns: &[&[V]], out: &mut Vec<V>| -> std::result::Result<(), usize> {
            let n = columns.first().map_or(0, |c| c.len());
            if n == 0 {
                return Ok(());
            }
            let mut buf = [columns[0][0]; MAX_FUNCTION_ARITY];
            for k in 0..n {
                for (slot, column) in buf.iter_mut().zip(columns) {
                    *slot = column[k];
                }
                match scalar(&buf[..columns.len()]) {
                    Some(v) if v.is_valid() => out.push(v),
                    _ => return Err(k),
                }
            }
            Ok(())
        };
        Self {
            name: name.into(),
            arity,
            notation,
            eval: Arc::new(eval),
            batch: Arc::new(batch),
        }
    }

    pub fn infix<F>(name: impl Into<String>, symbol: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[V]) -> Option<V> + Send + Sync + Clone + 'static,
    {
        Self::new(name, 2, Notation::Infix(symbol.into()), eval)
    }

    pub fn prefix<F>(name: impl Into<String>, arity: usize, eval: F) -> Self
    where
        F: Fn(&[V]) -> Option<V> + Send + Sync + Clone + 'static,
    {
        Self::new(name, arity, Notation::Prefix, eval)
    }

    #[inline]
    pub fn apply(&self, args: &[V]) -> Option<V> {
        (self.eval)(args)
    }

    /// Applies the function row-wise to argument columns, appending results
    /// to `out`. On an exception or invalid result, returns the index of the
    /// offending row; `out` then holds the results of the preceding rows.
    pub fn apply_columns(&self, columns: &[&[V]], out: &mut Vec<V>) -> std::result::Result<(), usize> {
        (self.batch)(columns, out)
    }
}

impl<V> fmt::Debug for Function<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Function")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish()
    }
}

/// The structural part of a primitive set: how many terminals there are and
/// the arity of each function. Variation operators only need this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub num_terminals: usize,
    pub arities: Vec<usize>,
}

impl Signature {
    pub fn new(num_terminals: usize, arities: Vec<usize>) -> Self {
        assert!(num_terminals >= 1, "a signature needs at least one terminal");
        Self {
            num_terminals,
            arities,
        }
    }

    pub fn num_functions(&self) -> usize {
        self.arities.len()
    }

    pub fn max_arity(&self) -> usize {
        self.arities.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct PrimitiveSet<V> {
    terminals: Vec<String>,
    functions: Vec<Function<V>>,
    signature: Signature,
}

impl<V: Value> PrimitiveSet<V> {
    pub fn new(terminals: Vec<String>, functions: Vec<Function<V>>) -> Result<Self> {
        if terminals.is_empty() {
            return Err(Error::InvalidParameter(
                "a primitive set needs at least one terminal".into(),
            ));
        }
        let mut names: Vec<&str> = terminals
            .iter()
            .map(String::as_str)
            .chain(functions.iter().map(|f| f.name.as_str()))
            .collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!(
                "duplicate symbol name `{}`",
                w[0]
            )));
        }
        if let Some(f) = functions.iter().find(|f| f.arity == 0) {
            return Err(Error::InvalidParameter(format!(
                "function `{}` has arity 0",
                f.name
            )));
        }
        let signature = Signature::new(
            terminals.len(),
            functions.iter().map(|f| f.arity).collect(),
        );
        Ok(Self {
            terminals,
            functions,
            signature,
        })
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn functions(&self) -> &[Function<V>] {
        &self.functions
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// The greatest function arity, `n`.
    pub fn max_arity(&self) -> usize {
        self.signature.max_arity()
    }

    pub fn terminal_index(&self, name: &str) -> Option<usize> {
        self.terminals.iter().position(|t| t == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }
}

/// Threshold below which a floating-point divisor raises an exception.
pub const DIVISION_EPSILON: f64 = 1e-12;

/// Real-valued functions.
pub mod real {
    use super::{Function, DIVISION_EPSILON};
    use crate::error::{Error, Result};

    pub fn add() -> Function<f64> {
        Function::infix("+", "+", |a: &[f64]| Some(a[0] + a[1]))
    }

    pub fn sub() -> Function<f64> {
        Function::infix("-", "-", |a: &[f64]| Some(a[0] - a[1]))
    }

    pub fn mul() -> Function<f64> {
        Function::infix("*", "*", |a: &[f64]| Some(a[0] * a[1]))
    }

    pub fn div() -> Function<f64> {
        Function::infix("/", "/", |a: &[f64]| {
            if a[1].abs() < DIVISION_EPSILON {
                None
            } else {
                Some(a[0] / a[1])
            }
        })
    }

    pub fn sin() -> Function<f64> {
        Function::prefix("sin", 1, |a: &[f64]| Some(a[0].sin()))
    }

    pub fn cos() -> Function<f64> {
        Function::prefix("cos", 1, |a: &[f64]| Some(a[0].cos()))
    }

    pub fn exp() -> Function<f64> {
        Function::prefix("exp", 1, |a: &[f64]| Some(a[0].exp()))
    }

    pub fn min() -> Function<f64> {
        Function::prefix("min", 2, |a: &[f64]| Some(a[0].min(a[1])))
    }

    pub fn max() -> Function<f64> {
        Function::prefix("max", 2, |a: &[f64]| Some(a[0].max(a[1])))
    }

    pub fn by_name(name: &str) -> Result<Function<f64>> {
        Ok(match name {
            "+" => add(),
            "-" => sub(),
            "*" => mul(),
            "/" => div(),
            "sin" => sin(),
            "cos" => cos(),
            "exp" => exp(),
            "min" => min(),
            "max" => max(),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown real function `{name}`"
                )))
            }
        })
    }

    /// `{+, -, *, /}`.
    pub fn arithmetic() -> Vec<Function<f64>> {
        vec![add(), sub(), mul(), div()]
    }
}

/// Boolean functions over `{0, 1}` stored as `u8`.
pub mod boolean {
    use super::Function;
    use crate::error::{Error, Result};

    pub fn and() -> Function<u8> {
        Function::prefix("AND", 2, |a: &[u8]| Some(a[0] & a[1]))
    }

    pub fn or() -> Function<u8> {
        Function::prefix("OR", 2, |a: &[u8]| Some(a[0] | a[1]))
    }

    pub fn nand() -> Function<u8> {
        Function::prefix("NAND", 2, |a: &[u8]| Some(1 - (a[0] & a[1])))
    }

    pub fn nor() -> Function<u8> {
        Function::prefix("NOR", 2, |a: &[u8]| Some(1 - (a[0] | a[1])))
    }

    pub fn xor() -> Function<u8> {
        Function::prefix("XOR", 2, |a: &[u8]| Some(a[0] ^ a[1]))
    }

    pub fn not() -> Function<u8> {
        Function::prefix("NOT", 1, |a: &[u8]| Some(1 - a[0]))
    }

    /// `IF(c, x, y)` is `y` when `c` is 0 and `x` otherwise.
    pub fn if_then_else() -> Function<u8> {
        Function::prefix("IF", 3, |a: &[u8]| Some(if a[0] == 0 { a[2] } else { a[1] }))
    }

    pub fn by_name(name: &str) -> Result<Function<u8>> {
        Ok(match name.to_ascii_uppercase().as_str() {
            "AND" => and(),
            "OR" => or(),
            "NAND" => nand(),
            "NOR" => nor(),
            "XOR" => xor(),
            "NOT" => not(),
            "IF" => if_then_else(),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown boolean function `{name}`"
                )))
            }
        })
    }
}

/// Two's-complement integer functions with guarded division.
pub mod integer {
    use super::Function;
    use crate::error::{Error, Result};

    pub fn add() -> Function<i64> {
        Function::infix("+", "+", |a: &[i64]| Some(a[0].wrapping_add(a[1])))
    }

    pub fn sub() -> Function<i64> {
        Function::infix("-", "-", |a: &[i64]| Some(a[0].wrapping_sub(a[1])))
    }

    pub fn mul() -> Function<i64> {
        Function::infix("*", "*", |a: &[i64]| Some(a[0].wrapping_mul(a[1])))
    }

    /// `x div 0` is `x`.
    pub fn div() -> Function<i64> {
        Function::infix("div", " div ", |a: &[i64]| {
            Some(if a[1] == 0 { a[0] } else { a[0].wrapping_div(a[1]) })
        })
    }

    /// `x mod 0` is `0`.
    pub fn modulo() -> Function<i64> {
        Function::infix("mod", " mod ", |a: &[i64]| {
            Some(if a[1] == 0 { 0 } else { a[0].wrapping_rem(a[1]) })
        })
    }

    pub fn and() -> Function<i64> {
        Function::infix("and", " and ", |a: &[i64]| Some(a[0] & a[1]))
    }

    pub fn or() -> Function<i64> {
        Function::infix("or", " or ", |a: &[i64]| Some(a[0] | a[1]))
    }

    pub fn xor() -> Function<i64> {
        Function::infix("xor", " xor ", |a: &[i64]| Some(a[0] ^ a[1]))
    }

    pub fn not() -> Function<i64> {
        Function::prefix("not", 1, |a: &[i64]| Some(!a[0]))
    }

    pub fn by_name(name: &str) -> Result<Function<i64>> {
        Ok(match name {
            "+" => add(),
            "-" => sub(),
            "*" => mul(),
            "div" => div(),
            "mod" => modulo(),
            "and" => and(),
            "or" => or(),
            "xor" => xor(),
            "not" => not(),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown integer function `{name}`"
                )))
            }
        })
    }

    /// `{+, -, *, div, mod, and, or, not, xor}`.
    pub fn nim_set() -> Vec<Function<i64>> {
        vec![
            add(),
            sub(),
            mul(),
            div(),
            modulo(),
            and(),
            or(),
            not(),
            xor(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_terminals() {
        assert!(PrimitiveSet::<f64>::new(vec![], real::arithmetic()).is_err());
    }

    #[test]
    fn rejects_duplicate_names() {
        let t = vec!["x".to_string(), "x".to_string()];
        assert!(PrimitiveSet::<f64>::new(t, vec![]).is_err());
    }

    #[test]
    fn reports_max_arity() {
        let set = PrimitiveSet::new(vec!["x".into()], vec![real::sin(), real::add()]).unwrap();
        assert_eq!(set.max_arity(), 2);
        assert_eq!(set.function_index("sin"), Some(0));
    }

    #[test]
    fn division_raises_near_zero() {
        let d = real::div();
        assert_eq!(d.apply(&[1.0, 0.0]), None);
        assert_eq!(d.apply(&[1.0, 1e-13]), None);
        assert_eq!(d.apply(&[1.0, 2.0]), Some(0.5));
    }

    #[test]
    fn integer_guards() {
        assert_eq!(integer::div().apply(&[7, 0]), Some(7));
        assert_eq!(integer::modulo().apply(&[7, 0]), Some(0));
        assert_eq!(integer::div().apply(&[i64::MIN, -1]), Some(i64::MIN));
        assert_eq!(integer::not().apply(&[0]), Some(-1));
    }

    #[test]
    fn if_semantics() {
        let f = boolean::if_then_else();
        assert_eq!(f.apply(&[0, 1, 0]), Some(0));
        assert_eq!(f.apply(&[1, 1, 0]), Some(1));
    }
}
