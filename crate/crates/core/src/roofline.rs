//! Roofline model mathematics.
//!
//! A kernel is placed on one roofline per operation class (SP, DP, INT). For each
//! class the arithmetic intensity (ops per byte of global memory traffic) is compared
//! against the balance point `peak / bandwidth`: strictly below is bandwidth-bound,
//! at or above is compute-bound. A kernel is bandwidth-bound only when it is
//! bandwidth-bound for all three classes.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RooflineError {
    #[error("{quantity} must be strictly positive, got {value}")]
    NonPositive { quantity: &'static str, value: f64 },
    #[error("{quantity} must be finite and non-negative, got {value}")]
    Negative { quantity: &'static str, value: f64 },
    #[error("per-op map has no entry for {0}")]
    MissingOpKind(OpKind),
    #[error("{what} dimensions must all be >= 1, got {dims}")]
    InvalidGeometry { what: &'static str, dims: Dim3 },
    #[error("{0} must not be empty")]
    Empty(&'static str),
    #[error("unrecognized {what}: {value:?}")]
    Unrecognized { what: &'static str, value: String },
}

/// Arithmetic operation class with its own roofline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OpKind {
    #[serde(rename = "SP")]
    Sp,
    #[serde(rename = "DP")]
    Dp,
    #[serde(rename = "INT")]
    Int,
}

impl OpKind {
    pub const ALL: [OpKind; 3] = [OpKind::Sp, OpKind::Dp, OpKind::Int];

    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::Sp => "SP",
            OpKind::Dp => "DP",
            OpKind::Int => "INT",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OpKind {
    type Err = RooflineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SP" => Ok(OpKind::Sp),
            "DP" => Ok(OpKind::Dp),
            "INT" => Ok(OpKind::Int),
            _ => Err(RooflineError::Unrecognized {
                what: "operation kind",
                value: s.to_string(),
            }),
        }
    }
}

/// A value for every [`OpKind`]; total by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PerOp<V> {
    #[serde(rename = "SP")]
    pub sp: V,
    #[serde(rename = "DP")]
    pub dp: V,
    #[serde(rename = "INT")]
    pub int: V,
}

impl<V> PerOp<V> {
    pub fn new(sp: V, dp: V, int: V) -> Self {
        Self { sp, dp, int }
    }

    pub fn from_fn(mut f: impl FnMut(OpKind) -> V) -> Self {
        Self {
            sp: f(OpKind::Sp),
            dp: f(OpKind::Dp),
            int: f(OpKind::Int),
        }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(OpKind) -> Result<V, E>) -> Result<Self, E> {
        Ok(Self {
            sp: f(OpKind::Sp)?,
            dp: f(OpKind::Dp)?,
            int: f(OpKind::Int)?,
        })
    }

    pub fn map<U>(&self, mut f: impl FnMut(OpKind, &V) -> U) -> PerOp<U> {
        PerOp::from_fn(|kind| f(kind, &self[kind]))
    }

    pub fn iter(&self) -> impl Iterator<Item = (OpKind, &V)> {
        OpKind::ALL.into_iter().map(move |kind| (kind, &self[kind]))
    }

    /// Builds a total map from a possibly partial one.
    pub fn try_from_map(map: &BTreeMap<OpKind, V>) -> Result<Self, RooflineError>
    where
        V: Clone,
    {
        Self::try_from_fn(|kind| map.get(&kind).cloned().ok_or(RooflineError::MissingOpKind(kind)))
    }
}

impl<V> Index<OpKind> for PerOp<V> {
    type Output = V;

    fn index(&self, kind: OpKind) -> &V {
        match kind {
            OpKind::Sp => &self.sp,
            OpKind::Dp => &self.dp,
            OpKind::Int => &self.int,
        }
    }
}

impl<V> IndexMut<OpKind> for PerOp<V> {
    fn index_mut(&mut self, kind: OpKind) -> &mut V {
        match kind {
            OpKind::Sp => &mut self.sp,
            OpKind::Dp => &mut self.dp,
            OpKind::Int => &mut self.int,
        }
    }
}

/// Source language of a program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "CUDA")]
    Cuda,
    #[serde(rename = "OMP")]
    Omp,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::Cuda, Language::Omp];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::Cuda => "CUDA",
            Language::Omp => "OMP",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = RooflineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cuda" => Ok(Language::Cuda),
            "omp" | "openmp" => Ok(Language::Omp),
            _ => Err(RooflineError::Unrecognized {
                what: "language",
                value: s.to_string(),
            }),
        }
    }
}

/// Binary roofline class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Boundedness {
    Compute,
    Bandwidth,
}

impl Boundedness {
    pub const ALL: [Boundedness; 2] = [Boundedness::Compute, Boundedness::Bandwidth];

    pub fn as_str(self) -> &'static str {
        match self {
            Boundedness::Compute => "Compute",
            Boundedness::Bandwidth => "Bandwidth",
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Boundedness::Compute => Boundedness::Bandwidth,
            Boundedness::Bandwidth => Boundedness::Compute,
        }
    }
}

impl fmt::Display for Boundedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Boundedness {
    type Err = RooflineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "compute" | "cb" => Ok(Boundedness::Compute),
            "bandwidth" | "bb" => Ok(Boundedness::Bandwidth),
            _ => Err(RooflineError::Unrecognized {
                what: "boundedness",
                value: s.to_string(),
            }),
        }
    }
}

/// Kernel launch geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dim3 {
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

impl Dim3 {
    pub fn new(x: u32, y: u32, z: u32) -> Self {
        Self { x, y, z }
    }

    pub fn is_valid(&self) -> bool {
        self.x >= 1 && self.y >= 1 && self.z >= 1
    }
}

impl Default for Dim3 {
    fn default() -> Self {
        Self::new(1, 1, 1)
    }
}

impl fmt::Display for Dim3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// Peak throughputs and memory bandwidth of a target GPU.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardwareSpec<T> {
    pub name: String,
    /// Giga-operations per second for each operation class.
    pub peak: PerOp<T>,
    pub bandwidth_gbs: T,
}

impl<T: Scalar> HardwareSpec<T> {
    pub fn new(name: impl Into<String>, peak: PerOp<T>, bandwidth_gbs: T) -> Result<Self, RooflineError> {
        let spec = Self {
            name: name.into(),
            peak,
            bandwidth_gbs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), RooflineError> {
        if self.name.trim().is_empty() {
            return Err(RooflineError::Empty("hardware name"));
        }
        for (kind, &peak) in self.peak.iter() {
            check_positive(peak_quantity(kind), peak)?;
        }
        check_positive("memory bandwidth", self.bandwidth_gbs)
    }

    pub fn balance_point(&self, kind: OpKind) -> Result<T, RooflineError> {
        balance_point(self.peak[kind], self.bandwidth_gbs)
    }
}

fn peak_quantity(kind: OpKind) -> &'static str {
    match kind {
        OpKind::Sp => "SP peak",
        OpKind::Dp => "DP peak",
        OpKind::Int => "INT peak",
    }
}

/// Profiled counters of one kernel invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile<T> {
    pub program_id: String,
    pub kernel_name: String,
    pub language: Language,
    pub op_counts: PerOp<T>,
    pub bytes_read: T,
    pub bytes_written: T,
    pub exec_time_s: T,
    pub grid: Dim3,
    pub block: Dim3,
    pub launch_args: String,
}

impl<T: Scalar> KernelProfile<T> {
    pub fn validate(&self) -> Result<(), RooflineError> {
        if self.program_id.trim().is_empty() {
            return Err(RooflineError::Empty("program id"));
        }
        if self.kernel_name.trim().is_empty() {
            return Err(RooflineError::Empty("kernel name"));
        }
        for (kind, &count) in self.op_counts.iter() {
            check_non_negative(op_quantity(kind), count)?;
        }
        check_non_negative("bytes read", self.bytes_read)?;
        check_non_negative("bytes written", self.bytes_written)?;
        check_positive("execution time", self.exec_time_s)?;
        if !self.grid.is_valid() {
            return Err(RooflineError::InvalidGeometry {
                what: "grid",
                dims: self.grid,
            });
        }
        if !self.block.is_valid() {
            return Err(RooflineError::InvalidGeometry {
                what: "block",
                dims: self.block,
            });
        }
        Ok(())
    }

    pub fn validated(self) -> Result<Self, RooflineError> {
        self.validate()?;
        Ok(self)
    }

    pub fn total_bytes(&self) -> T {
        self.bytes_read + self.bytes_written
    }
}

fn op_quantity(kind: OpKind) -> &'static str {
    match kind {
        OpKind::Sp => "SP op count",
        OpKind::Dp => "DP op count",
        OpKind::Int => "INT op count",
    }
}

/// A kernel placed on one roofline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct RooflinePoint<T> {
    /// Ops per byte; `+inf` when the kernel moved no bytes but did work.
    #[serde(with = "crate::serde_float")]
    pub ai: T,
    pub achieved_gops: T,
    pub kind: OpKind,
    pub label: Boundedness,
}

/// Degenerate inputs encountered while labeling a kernel.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum LabelWarning {
    /// Zero ops and zero bytes: intensity taken as 0, labeled bandwidth-bound.
    NoActivity { kind: OpKind },
    /// Ops without memory traffic: intensity is infinite, labeled compute-bound.
    NoMemoryTraffic { kind: OpKind },
}

impl fmt::Display for LabelWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelWarning::NoActivity { kind } => {
                write!(f, "{kind}: no ops and no memory traffic, intensity taken as 0")
            }
            LabelWarning::NoMemoryTraffic { kind } => {
                write!(f, "{kind}: ops without memory traffic, intensity is infinite")
            }
        }
    }
}

/// Result of [`label_kernel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct KernelLabel<T> {
    pub label: Boundedness,
    pub points: PerOp<RooflinePoint<T>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<LabelWarning>,
}

impl<T> KernelLabel<T> {
    pub fn per_op_labels(&self) -> PerOp<Boundedness> {
        self.points.map(|_, p| p.label)
    }
}

fn check_positive<T: Scalar>(quantity: &'static str, value: T) -> Result<(), RooflineError> {
    if value.is_finite() && value > T::zero() {
        Ok(())
    } else {
        Err(RooflineError::NonPositive {
            quantity,
            value: value.to_f64().unwrap_or(f64::NAN),
        })
    }
}

fn check_non_negative<T: Scalar>(quantity: &'static str, value: T) -> Result<(), RooflineError> {
    if value.is_finite() && value >= T::zero() {
        Ok(())
    } else {
        Err(RooflineError::Negative {
            quantity,
            value: value.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Intensity at which the memory roof meets the compute roof.
pub fn balance_point<T: Scalar>(peak_gops: T, bandwidth_gbs: T) -> Result<T, RooflineError> {
    check_positive("peak throughput", peak_gops)?;
    check_positive("memory bandwidth", bandwidth_gbs)?;
    Ok(peak_gops / bandwidth_gbs)
}

/// Ops per byte. No traffic with work gives `+inf`; no traffic and no work gives 0.
pub fn arithmetic_intensity<T: Scalar>(ops: T, bytes_total: T) -> T {
    if bytes_total > T::zero() {
        ops / bytes_total
    } else if ops > T::zero() {
        T::infinity()
    } else {
        T::zero()
    }
}

/// Bandwidth-bound iff strictly below the balance point.
pub fn classify_op<T: Scalar>(ai: T, balance: T) -> Boundedness {
    if ai < balance {
        Boundedness::Bandwidth
    } else {
        Boundedness::Compute
    }
}

/// Bandwidth-bound iff bandwidth-bound for every operation class.
pub fn aggregate_label(per_op: &PerOp<Boundedness>) -> Boundedness {
    if per_op.iter().all(|(_, &b)| b == Boundedness::Bandwidth) {
        Boundedness::Bandwidth
    } else {
        Boundedness::Compute
    }
}

/// [`aggregate_label`] over a map that may be missing entries.
pub fn aggregate_label_map(per_op: &BTreeMap<OpKind, Boundedness>) -> Result<Boundedness, RooflineError> {
    PerOp::try_from_map(per_op).map(|m| aggregate_label(&m))
}

/// Giga-ops per second.
pub fn achieved_performance<T: Scalar>(ops: T, exec_time_s: T) -> Result<T, RooflineError> {
    check_positive("execution time", exec_time_s)?;
    Ok(ops / exec_time_s / T::of(1e9))
}

/// Attainable throughput `min(peak, ai * bandwidth)` in giga-ops per second.
pub fn roofline_ceiling<T: Scalar>(ai: T, spec: &HardwareSpec<T>, kind: OpKind) -> T {
    let peak = spec.peak[kind];
    if ai.is_infinite() {
        return peak;
    }
    peak.min(ai * spec.bandwidth_gbs)
}

/// Labels a kernel against all three rooflines of `spec`.
pub fn label_kernel<T: Scalar>(
    profile: &KernelProfile<T>,
    spec: &HardwareSpec<T>,
) -> Result<KernelLabel<T>, RooflineError> {
    profile.validate()?;
    spec.validate()?;
    let bytes = profile.total_bytes();
    let mut warnings = Vec::new();
    let points = PerOp::try_from_fn(|kind| {
        let ops = profile.op_counts[kind];
        if bytes == T::zero() {
            if ops == T::zero() {
                warnings.push(LabelWarning::NoActivity { kind });
            } else {
                warnings.push(LabelWarning::NoMemoryTraffic { kind });
            }
        }
        let ai = arithmetic_intensity(ops, bytes);
        let balance = spec.balance_point(kind)?;
        Ok::<_, RooflineError>(RooflinePoint {
            ai,
            achieved_gops: achieved_performance(ops, profile.exec_time_s)?,
            kind,
            label: classify_op(ai, balance),
        })
    })?;
    let label = aggregate_label(&points.map(|_, p| p.label));
    Ok(KernelLabel {
        label,
        points,
        warnings,
    })
}
