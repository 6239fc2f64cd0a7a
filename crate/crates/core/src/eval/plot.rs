//! Roofline plot data as CSV.
//!
//! Columns: `series,kind,program_id,ai,gops,label`.
//!
//! * `roof` rows sample the ceiling of each op kind at intensities of
//!   balance × {1/100, 1/10, 1, 10, 100}; the middle sample is the knee.
//! * `knee` rows repeat the balance point on its own for convenience.
//! * `kernel` rows hold one point per (program, op kind) with its label. An
//!   infinite intensity is written as `inf`.

use std::path::Path;

use super::EvalError;
use crate::io::write_text;
use crate::roofline::{roofline_ceiling, HardwareSpec, KernelLabel, OpKind};
use crate::scalar::Scalar;

pub const PLOT_COLUMNS: [&str; 6] = ["series", "kind", "program_id", "ai", "gops", "label"];
const ROOF_FACTORS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

fn num<T: Scalar>(v: T) -> String {
    if v.is_infinite() {
        if v > T::zero() { "inf" } else { "-inf" }.to_string()
    } else {
        v.to_string()
    }
}

pub fn render_roofline_plot_data<'a, T: Scalar>(
    kernels: impl IntoIterator<Item = (&'a str, &'a KernelLabel<T>)>,
    spec: &HardwareSpec<T>,
) -> Result<String, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| EvalError::Usage(e.to_string());
    w.write_record(PLOT_COLUMNS).map_err(csv_err)?;
    for kind in OpKind::ALL {
        let balance = spec.balance_point(kind).map_err(|e| EvalError::Usage(e.to_string()))?;
        for f in ROOF_FACTORS {
            let ai = balance * T::of(f);
            let gops = roofline_ceiling(ai, spec, kind);
            w.write_record(["roof", kind.as_str(), "", &num(ai), &num(gops), ""])
                .map_err(csv_err)?;
        }
        w.write_record(["knee", kind.as_str(), "", &num(balance), &num(spec.peak[kind]), ""])
            .map_err(csv_err)?;
    }
    for (program_id, label) in kernels {
        for (kind, p) in label.points.iter() {
            w.write_record([
                "kernel",
                kind.as_str(),
                program_id,
                &num(p.ai),
                &num(p.achieved_gops),
                p.label.as_str(),
            ])
            .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| EvalError::Usage(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| EvalError::Usage(e.to_string()))
}

pub fn emit_roofline_plot_data<'a, T: Scalar>(
    kernels: impl IntoIterator<Item = (&'a str, &'a KernelLabel<T>)>,
    spec: &HardwareSpec<T>,
    path: &Path,
) -> Result<(), EvalError> {
    let text = render_roofline_plot_data(kernels, spec)?;
    write_text(path, &text).map_err(EvalError::File)
}
