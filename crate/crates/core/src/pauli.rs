use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ir::IrInstruction;

#[derive(Debug, Error, PartialEq)]
pub enum PauliError {
    #[error("not a supported Clifford gate: {0}")]
    UnsupportedGate(String),
    #[error("invalid Pauli string: {0:?}")]
    Parse(String),
}

/// One-qubit non-identity Pauli.
#[derive(Clone, Copy, Debug, Eq, Hash, Ord, PartialEq, PartialOrd)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn as_char(self) -> char {
        match self {
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'X' => Some(PauliAxis::X),
            'Y' => Some(PauliAxis::Y),
            'Z' => Some(PauliAxis::Z),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, Eq, Hash, Ord, PartialEq, PartialOrd)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl std::ops::Neg for Sign {
    type Output = Self;

    fn neg(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl std::ops::Mul for Sign {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// A sign plus a one-qubit axis, e.g. -Z. Used for single-qubit rotation
/// annotations produced by gate synthesis.
#[derive(Clone, Copy, Debug, Eq, Hash, PartialEq)]
pub struct SignedAxis {
    pub sign: Sign,
    pub axis: PauliAxis,
}

impl SignedAxis {
    pub fn new(sign: Sign, axis: PauliAxis) -> Self {
        SignedAxis { sign, axis }
    }
}

impl fmt::Display for SignedAxis {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}{}", self.sign.as_char(), self.axis.as_char())
    }
}

impl FromStr for SignedAxis {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let sign = match chars.next() {
            Some('+') => Sign::Plus,
            Some('-') => Sign::Minus,
            _ => return Err(PauliError::Parse(s.to_string())),
        };
        let axis = chars
            .next()
            .and_then(PauliAxis::from_char)
            .ok_or_else(|| PauliError::Parse(s.to_string()))?;
        if chars.next().is_some() {
            return Err(PauliError::Parse(s.to_string()));
        }
        Ok(SignedAxis { sign, axis })
    }
}

/// Scalar factor i^k arising from Pauli multiplication.
#[derive(Clone, Copy, Debug, Eq, PartialEq)]
pub struct Phase {
    exponent: u8,
}

impl Phase {
    pub const ONE: Phase = Phase { exponent: 0 };
    pub const I: Phase = Phase { exponent: 1 };
    pub const MINUS_ONE: Phase = Phase { exponent: 2 };
    pub const MINUS_I: Phase = Phase { exponent: 3 };

    pub fn from_exponent(k: u8) -> Self {
        Phase { exponent: k % 4 }
    }

    /// Exponent k of i^k, in 0..4.
    pub fn exponent(self) -> u8 {
        self.exponent
    }

    pub fn is_real(self) -> bool {
        self.exponent % 2 == 0
    }
}

impl std::ops::Mul for Phase {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        Phase::from_exponent(self.exponent + other.exponent)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let s = match self.exponent {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            3 => "-i",
            _ => unreachable!(),
        };
        write!(f, "{}", s)
    }
}

// Per-site product a * b. Returns the resulting axis (None for identity) and
// the exponent of the scalar i^k.
fn site_product(a: PauliAxis, b: PauliAxis) -> (Option<PauliAxis>, u8) {
    use PauliAxis::*;
    match (a, b) {
        (X, X) | (Y, Y) | (Z, Z) => (None, 0),
        (X, Y) => (Some(Z), 1),
        (Y, Z) => (Some(X), 1),
        (Z, X) => (Some(Y), 1),
        (Y, X) => (Some(Z), 3),
        (Z, Y) => (Some(X), 3),
        (X, Z) => (Some(Y), 3),
    }
}

/// An n-qubit Hermitian Pauli string with a ±1 sign. Only non-identity sites
/// are stored, keyed by qubit index.
#[derive(Clone, Debug, Eq, Hash, PartialEq)]
pub struct SignedPauli {
    sign: Sign,
    axes: BTreeMap<u32, PauliAxis>,
}

impl SignedPauli {
    pub fn identity() -> Self {
        SignedPauli {
            sign: Sign::Plus,
            axes: BTreeMap::new(),
        }
    }

    pub fn new(sign: Sign, sites: impl IntoIterator<Item = (u32, PauliAxis)>) -> Self {
        SignedPauli {
            sign,
            axes: sites.into_iter().collect(),
        }
    }

    pub fn single(qubit: u32, axis: PauliAxis, sign: Sign) -> Self {
        let mut axes = BTreeMap::new();
        axes.insert(qubit, axis);
        SignedPauli { sign, axes }
    }

    pub fn x(qubit: u32) -> Self {
        Self::single(qubit, PauliAxis::X, Sign::Plus)
    }

    pub fn y(qubit: u32) -> Self {
        Self::single(qubit, PauliAxis::Y, Sign::Plus)
    }

    pub fn z(qubit: u32) -> Self {
        Self::single(qubit, PauliAxis::Z, Sign::Plus)
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = sign;
        self
    }

    pub fn negated(&self) -> Self {
        SignedPauli {
            sign: -self.sign,
            axes: self.axes.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.axes.is_empty()
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        self.axes.len()
    }

    pub fn axis_on(&self, qubit: u32) -> Option<PauliAxis> {
        self.axes.get(&qubit).copied()
    }

    /// Qubit indices with a non-identity axis, in increasing order.
    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.axes.keys().copied()
    }

    pub fn sites(&self) -> impl Iterator<Item = (u32, PauliAxis)> + '_ {
        self.axes.iter().map(|(&q, &a)| (q, a))
    }

    pub fn max_qubit(&self) -> Option<u32> {
        self.axes.keys().next_back().copied()
    }
}

impl fmt::Display for SignedPauli {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}", self.sign.as_char())?;
        if self.axes.is_empty() {
            return write!(f, "I");
        }
        for (q, a) in &self.axes {
            write!(f, "{}{}", a.as_char(), q)?;
        }
        Ok(())
    }
}

impl FromStr for SignedPauli {
    type Err = PauliError;

    // Parses e.g. "+Z0", "-X0X1", "+I".
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PauliError::Parse(s.to_string());
        let mut chars = s.chars().peekable();
        let sign = match chars.next() {
            Some('+') => Sign::Plus,
            Some('-') => Sign::Minus,
            _ => return Err(err()),
        };
        if chars.peek() == Some(&'I') {
            chars.next();
            if chars.next().is_some() {
                return Err(err());
            }
            return Ok(SignedPauli {
                sign,
                axes: BTreeMap::new(),
            });
        }
        let mut axes = BTreeMap::new();
        while let Some(c) = chars.next() {
            let axis = PauliAxis::from_char(c).ok_or_else(err)?;
            let mut digits = String::new();
            while let Some(d) = chars.peek() {
                if d.is_ascii_digit() {
                    digits.push(*d);
                    chars.next();
                } else {
                    break;
                }
            }
            let qubit: u32 = digits.parse().map_err(|_| err())?;
            if axes.insert(qubit, axis).is_some() {
                return Err(err());
            }
        }
        if axes.is_empty() {
            return Err(err());
        }
        Ok(SignedPauli { sign, axes })
    }
}

/// Operator product p * q. The returned string carries sign +1; the full
/// scalar, including both input signs, is returned as the phase.
pub fn multiply(p: &SignedPauli, q: &SignedPauli) -> (Phase, SignedPauli) {
    let mut k: u8 = 0;
    if p.sign == Sign::Minus {
        k += 2;
    }
    if q.sign == Sign::Minus {
        k += 2;
    }
    let mut axes = p.axes.clone();
    for (&qubit, &b) in &q.axes {
        match axes.get(&qubit) {
            Some(&a) => {
                let (prod, dk) = site_product(a, b);
                k = (k + dk) % 4;
                match prod {
                    Some(x) => {
                        axes.insert(qubit, x);
                    }
                    None => {
                        axes.remove(&qubit);
                    }
                }
            }
            None => {
                axes.insert(qubit, b);
            }
        }
    }
    (
        Phase::from_exponent(k),
        SignedPauli {
            sign: Sign::Plus,
            axes,
        },
    )
}

/// True iff pq = qp: the number of sites where both strings are non-identity
/// and differ is even. Signs do not matter.
pub fn commutes(p: &SignedPauli, q: &SignedPauli) -> bool {
    let anticommuting_sites = p
        .axes
        .iter()
        .filter(|(qubit, a)| q.axes.get(qubit).is_some_and(|b| b != *a))
        .count();
    anticommuting_sites % 2 == 0
}

#[derive(Clone, Copy, Debug, Eq, Hash, PartialEq)]
pub enum RotationKind {
    /// exp(i*pi/4 * axis), a Clifford.
    Quarter,
    /// exp(i*pi/8 * axis), non-Clifford.
    Eighth,
}

/// A Pauli rotation exp(i*theta*axis) with theta = ±pi/4 or ±pi/8. The sign
/// of the angle lives in the axis sign, so there is no separate angle field.
#[derive(Clone, Debug, Eq, Hash, PartialEq)]
pub struct Rotation {
    pub kind: RotationKind,
    pub axis: SignedPauli,
}

impl Rotation {
    pub fn quarter(axis: SignedPauli) -> Self {
        Rotation {
            kind: RotationKind::Quarter,
            axis,
        }
    }

    pub fn eighth(axis: SignedPauli) -> Self {
        Rotation {
            kind: RotationKind::Eighth,
            axis,
        }
    }

    /// Rotation angle in radians, sign included.
    pub fn angle(&self) -> f64 {
        let magnitude = match self.kind {
            RotationKind::Quarter => std::f64::consts::FRAC_PI_4,
            RotationKind::Eighth => std::f64::consts::PI / 8.0,
        };
        self.axis.sign().as_f64() * magnitude
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        let kind = match self.kind {
            RotationKind::Quarter => "quarter",
            RotationKind::Eighth => "eighth",
        };
        write!(f, "{}({})", kind, self.axis)
    }
}

/// A Pauli measurement along a signed axis. Measuring along -P and recording
/// outcome m is the same as measuring along +P and recording 1-m.
#[derive(Clone, Debug, Eq, Hash, PartialEq)]
pub struct PauliMeasurement {
    pub axis: SignedPauli,
}

impl PauliMeasurement {
    pub fn new(axis: SignedPauli) -> Self {
        PauliMeasurement { axis }
    }
}

// exp(-i*pi/4 * p) * later * exp(+i*pi/4 * p). For anticommuting p this is
// -i * p * later; the sign of p folds into the result sign.
pub(crate) fn conjugate_by_quarter(p: &SignedPauli, later: &SignedPauli) -> SignedPauli {
    if commutes(p, later) {
        return later.clone();
    }
    let (phase, mut result) = multiply(p, later);
    let k = (phase.exponent() + 3) % 4;
    debug_assert!(k == 0 || k == 2, "anticommuting product must be ±i");
    if k == 2 {
        result.sign = Sign::Minus;
    }
    result
}

/// Moves a quarter rotation from before `later` to after it: returns the axis
/// P'' such that applying `later`'s operation along P'' and then `quarter` is
/// equivalent to applying `quarter` and then the operation along `later`.
pub fn push_right(quarter: &Rotation, later: &SignedPauli) -> SignedPauli {
    assert_eq!(quarter.kind, RotationKind::Quarter);
    conjugate_by_quarter(&quarter.axis, later)
}

/// Decomposes one of the supported Clifford gates into quarter rotations, in
/// circuit-time order (first applied first).
pub fn clifford_as_quarters(gate: &IrInstruction) -> Result<Vec<Rotation>, PauliError> {
    use IrInstruction::*;
    use PauliAxis::*;
    let single = |q: u32, axis, sign| Rotation::quarter(SignedPauli::single(q, axis, sign));
    match gate {
        H { qubit } => Ok(vec![
            single(*qubit, Z, Sign::Plus),
            single(*qubit, X, Sign::Plus),
            single(*qubit, Z, Sign::Plus),
        ]),
        S { qubit } => Ok(vec![single(*qubit, Z, Sign::Minus)]),
        Sdg { qubit } => Ok(vec![single(*qubit, Z, Sign::Plus)]),
        Cx { control, target } => Ok(vec![
            single(*target, X, Sign::Minus),
            single(*control, Z, Sign::Minus),
            Rotation::quarter(SignedPauli::new(
                Sign::Plus,
                [(*control, Z), (*target, X)],
            )),
        ]),
        Cz { a, b } => Ok(vec![
            single(*a, Z, Sign::Minus),
            single(*b, Z, Sign::Minus),
            Rotation::quarter(SignedPauli::new(Sign::Plus, [(*a, Z), (*b, Z)])),
        ]),
        other => Err(PauliError::UnsupportedGate(format!("{:?}", other))),
    }
}
