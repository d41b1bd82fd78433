//! Parameter values carried by models, draws, method outputs and settings.

use std::fmt;

use indexmap::IndexMap;

/// Dense row-major matrix of doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            rows * cols,
            data.len(),
            "matrix data length does not match {rows}x{cols}"
        );
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![0.0; rows * cols])
    }

    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, col_major: &[f64]) -> Self {
        assert_eq!(rows * cols, col_major.len());
        let mut data = vec![0.0; rows * cols];
        for j in 0..cols {
            for i in 0..rows {
                data[i * cols + j] = col_major[j * rows + i];
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Row-major data.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Column-major copy of the data.
    pub fn to_col_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self.get(i, j));
            }
        }
        out
    }

    /// Keeps the rows whose indices are listed, in the order given.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Matrix::new(rows.len(), self.cols, data)
    }
}

/// A value stored in a parameter or output map.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Integer(i64),
    Boolean(bool),
    Str(String),
    Vector(Vec<f64>),
    Matrix(Matrix),
    List(Vec<ParamValue>),
}

/// Insertion-ordered name → value map.
pub type ParamMap = IndexMap<String, ParamValue>;

impl ParamValue {
    pub fn type_name(&self) -> &'static str {
        match self {
            ParamValue::Number(_) => "number",
            ParamValue::Integer(_) => "integer",
            ParamValue::Boolean(_) => "boolean",
            ParamValue::Str(_) => "string",
            ParamValue::Vector(_) => "vector",
            ParamValue::Matrix(_) => "matrix",
            ParamValue::List(_) => "list",
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(
            self,
            ParamValue::Number(_)
                | ParamValue::Integer(_)
                | ParamValue::Boolean(_)
                | ParamValue::Str(_)
        )
    }

    /// Numeric view of a scalar number, integer or boolean.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Number(x) => Some(x),
            ParamValue::Integer(i) => Some(i as f64),
            ParamValue::Boolean(b) => Some(if b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            ParamValue::Integer(i) => Some(i),
            ParamValue::Number(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => Some(x as i64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            ParamValue::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&Matrix> {
        match self {
            ParamValue::Matrix(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[ParamValue]> {
        match self {
            ParamValue::List(l) => Some(l),
            _ => None,
        }
    }

    /// Equality that distinguishes floats by bit pattern (NaN == NaN, 0.0 != -0.0).
    pub fn bit_eq(&self, other: &ParamValue) -> bool {
        fn slices(a: &[f64], b: &[f64]) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        match (self, other) {
            (ParamValue::Number(a), ParamValue::Number(b)) => a.to_bits() == b.to_bits(),
            (ParamValue::Integer(a), ParamValue::Integer(b)) => a == b,
            (ParamValue::Boolean(a), ParamValue::Boolean(b)) => a == b,
            (ParamValue::Str(a), ParamValue::Str(b)) => a == b,
            (ParamValue::Vector(a), ParamValue::Vector(b)) => slices(a, b),
            (ParamValue::Matrix(a), ParamValue::Matrix(b)) => {
                a.dims() == b.dims() && slices(a.data(), b.data())
            }
            (ParamValue::List(a), ParamValue::List(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.bit_eq(y))
            }
            _ => false,
        }
    }

    /// Short human-readable description of the value's shape.
    pub fn shape(&self) -> String {
        match self {
            ParamValue::Vector(v) => format!("vector[{}]", v.len()),
            ParamValue::Matrix(m) => format!("matrix[{}x{}]", m.rows(), m.cols()),
            ParamValue::List(l) => format!("list[{}]", l.len()),
            other => other.type_name().to_string(),
        }
    }
}

/// Bit-exact comparison of two maps, including key order.
pub fn map_bit_eq(a: &ParamMap, b: &ParamMap) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|((ka, va), (kb, vb))| ka == kb && va.bit_eq(vb))
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Number(x) => write!(f, "{x}"),
            ParamValue::Integer(i) => write!(f, "{i}"),
            ParamValue::Boolean(b) => write!(f, "{b}"),
            ParamValue::Str(s) => write!(f, "{s}"),
            other => f.write_str(&other.shape()),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(x: f64) -> Self {
        ParamValue::Number(x)
    }
}

impl From<i64> for ParamValue {
    fn from(i: i64) -> Self {
        ParamValue::Integer(i)
    }
}

impl From<i32> for ParamValue {
    fn from(i: i32) -> Self {
        ParamValue::Integer(i64::from(i))
    }
}

impl From<usize> for ParamValue {
    fn from(i: usize) -> Self {
        ParamValue::Integer(i as i64)
    }
}

impl From<bool> for ParamValue {
    fn from(b: bool) -> Self {
        ParamValue::Boolean(b)
    }
}

impl From<&str> for ParamValue {
    fn from(s: &str) -> Self {
        ParamValue::Str(s.to_string())
    }
}

impl From<String> for ParamValue {
    fn from(s: String) -> Self {
        ParamValue::Str(s)
    }
}

impl From<Vec<f64>> for ParamValue {
    fn from(v: Vec<f64>) -> Self {
        ParamValue::Vector(v)
    }
}

impl From<Matrix> for ParamValue {
    fn from(m: Matrix) -> Self {
        ParamValue::Matrix(m)
    }
}

impl From<Vec<ParamValue>> for ParamValue {
    fn from(l: Vec<ParamValue>) -> Self {
        ParamValue::List(l)
    }
}

/// Builds a list-valued argument, as used with `vary_along`.
pub fn list_of<T: Into<ParamValue>>(items: impl IntoIterator<Item = T>) -> ParamValue {
    ParamValue::List(items.into_iter().map(Into::into).collect())
}

/// `params!{"n" => 200, "p" => 500}` builds a [`ParamMap`].
#[macro_export]
macro_rules! params {
    () => { $crate::ParamMap::new() };
    ($($key:expr => $value:expr),+ $(,)?) => {{
        let mut map = $crate::ParamMap::new();
        $( map.insert(String::from($key), $crate::ParamValue::from($value)); )+
        map
    }};
}
