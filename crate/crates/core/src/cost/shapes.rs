use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::arch::{conv_out_size, validate, ArchSpec};
use crate::error::{Error, Result};

/// Activation shape after one layer (or residual block).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeEntry {
    pub layer_id: String,
    pub out_t: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub out_c: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeTrace {
    pub entries: Vec<ShapeEntry>,
}

impl ShapeTrace {
    pub fn get(&self, layer_id: &str) -> Option<&ShapeEntry> {
        self.entries.iter().find(|e| e.layer_id == layer_id)
    }

    /// Output of the last block of a stage, e.g. `stage_output("res4")`.
    pub fn stage_output(&self, stage: &str) -> Option<&ShapeEntry> {
        let prefix = format!("{stage}.");
        self.entries.iter().rev().find(|e| e.layer_id.starts_with(&prefix))
    }

    pub fn push(&mut self, layer_id: impl Into<String>, t: usize, h: usize, w: usize, c: usize) {
        self.entries.push(ShapeEntry {
            layer_id: layer_id.into(),
            out_t: t,
            out_h: h,
            out_w: w,
            out_c: c,
        });
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Layer-by-layer output sizes using `out = floor((in + 2p - k) / s) + 1`.
pub fn propagate_shapes(spec: &ArchSpec) -> Result<ShapeTrace> {
    let violations = validate(spec);
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    let t = spec.input.frames;
    let mut size = spec.input.resolution;
    let mut trace = ShapeTrace::default();
    trace.push("data", t, size, size, 3);

    size = conv_out_size(size, 3, 2);
    check(size, "conv1")?;
    trace.push("conv1", t, size, size, spec.conv1.width);

    for block in spec.blocks() {
        size = conv_out_size(size, 3, block.spec.spatial_stride);
        check(size, &block.id)?;
        trace.push(block.id, t, size, size, block.spec.out_width);
    }
    trace.push("conv5", t, size, size, spec.head.conv5_width);
    Ok(trace)
}

fn check(size: usize, layer: &str) -> Result<()> {
    if size == 0 {
        Err(Error::DegenerateShape {
            layer: layer.to_string(),
            detail: "spatial size reached zero".into(),
        })
    } else {
        Ok(())
    }
}
