use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::shapes::propagate_shapes;
use crate::arch::{conv_out_size, ArchSpec, Category};
use crate::error::{Error, Result};

/// Multiply-adds and parameters of one weight layer, before any counting
/// convention is applied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerCost {
    pub layer_id: String,
    pub scope: String,
    pub category: Category,
    pub flops: u64,
    pub params: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub flops: u64,
    pub params: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Self) {
        self.flops += rhs.flops;
        self.params += rhs.params;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeCounts {
    pub scope: String,
    pub flops: u64,
    pub params: u64,
}

/// Single-clip, single-crop complexity with breakdowns that sum to the
/// totals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub flops_madds: u64,
    pub params: u64,
    /// Scopes in network order: conv1, res2..res5, head.
    pub per_stage: Vec<ScopeCounts>,
    pub per_category: BTreeMap<Category, Counts>,
}

struct Conv {
    in_c: usize,
    out_c: usize,
    kernel: [usize; 3],
    groups: usize,
}

impl Conv {
    fn params(&self) -> u64 {
        let k: usize = self.kernel.iter().product();
        (self.out_c * (self.in_c / self.groups) * k) as u64
    }

    fn flops(&self, out_elements: u64) -> u64 {
        out_elements * self.params()
    }
}

struct Collector {
    layers: Vec<LayerCost>,
}

impl Collector {
    fn conv(&mut self, scope: &str, id: String, conv: Conv, out_elements: u64) {
        self.layers.push(LayerCost {
            layer_id: id,
            scope: scope.to_string(),
            category: Category::Conv,
            flops: conv.flops(out_elements),
            params: conv.params(),
        });
    }

    fn norm(&mut self, scope: &str, id: String, channels: usize) {
        self.layers.push(LayerCost {
            layer_id: id,
            scope: scope.to_string(),
            category: Category::Norm,
            flops: 0,
            params: 2 * channels as u64,
        });
    }

    fn linear(&mut self, scope: &str, id: String, category: Category, in_f: usize, out_f: usize) {
        self.layers.push(LayerCost {
            layer_id: id,
            scope: scope.to_string(),
            category,
            flops: (in_f * out_f) as u64,
            params: (in_f * out_f + out_f) as u64,
        });
    }
}

/// Every weight layer of `spec` with its raw multiply-adds and parameters.
pub fn layer_costs(spec: &ArchSpec) -> Result<Vec<LayerCost>> {
    // validates the spec and guarantees nonzero sizes
    propagate_shapes(spec)?;

    let t = spec.input.frames as u64;
    let mut c = Collector { layers: Vec::new() };
    let c1 = spec.conv1.width;

    let mut size = conv_out_size(spec.input.resolution, 3, 2);
    let plane = |s: usize| t * (s * s) as u64;
    c.conv(
        "conv1",
        "conv1.spatial".into(),
        Conv { in_c: 3, out_c: c1, kernel: [1, 3, 3], groups: 1 },
        plane(size),
    );
    c.conv(
        "conv1",
        "conv1.temporal".into(),
        Conv { in_c: c1, out_c: c1, kernel: [3, 1, 1], groups: c1 },
        plane(size),
    );
    c.norm("conv1", "conv1.norm".into(), c1);

    for block in spec.blocks() {
        let b = &block.spec;
        let scope = spec.stages[block.stage].name.as_str();
        let id = |suffix: &str| format!("{}.{suffix}", block.id);
        let in_size = size;
        size = conv_out_size(size, 3, b.spatial_stride);
        let bw = b.bottleneck_width;

        c.conv(scope, id("conv_a"), Conv { in_c: b.in_width, out_c: bw, kernel: [1, 1, 1], groups: 1 }, plane(in_size));
        c.norm(scope, id("norm_a"), bw);
        let groups = if b.channelwise { bw } else { 1 };
        c.conv(scope, id("conv_b"), Conv { in_c: bw, out_c: bw, kernel: [3, 3, 3], groups }, plane(size));
        c.norm(scope, id("norm_b"), bw);
        if b.has_se {
            c.linear(scope, id("se.reduce"), Category::Se, bw, b.se_width);
            c.linear(scope, id("se.expand"), Category::Se, b.se_width, bw);
        }
        c.conv(scope, id("conv_c"), Conv { in_c: bw, out_c: b.out_width, kernel: [1, 1, 1], groups: 1 }, plane(size));
        c.norm(scope, id("norm_c"), b.out_width);
        if b.has_projection_shortcut {
            c.conv(
                scope,
                id("shortcut"),
                Conv { in_c: b.in_width, out_c: b.out_width, kernel: [1, 1, 1], groups: 1 },
                plane(size),
            );
            c.norm(scope, id("shortcut_norm"), b.out_width);
        }
    }

    let h = &spec.head;
    c.conv(
        "head",
        "head.conv5".into(),
        Conv { in_c: spec.last_stage_width(), out_c: h.conv5_width, kernel: [1, 1, 1], groups: 1 },
        plane(size),
    );
    c.norm("head", "head.conv5_norm".into(), h.conv5_width);
    c.linear("head", "head.fc1".into(), Category::Fc, h.conv5_width, h.fc1_width);
    c.linear("head", "head.fc2".into(), Category::Fc, h.fc1_width, h.classes);
    Ok(c.layers)
}

/// Counted multiply-adds for a single clip and crop.
pub fn count_flops(spec: &ArchSpec) -> Result<u64> {
    Ok(report(spec)?.flops_madds)
}

pub fn count_params(spec: &ArchSpec) -> Result<u64> {
    Ok(report(spec)?.params)
}

pub fn report(spec: &ArchSpec) -> Result<ComplexityReport> {
    let layers = layer_costs(spec)?;
    let conv = &spec.count_convention;
    let mut per_stage: Vec<ScopeCounts> = Vec::new();
    let mut per_category: BTreeMap<Category, Counts> =
        Category::ALL.iter().map(|&c| (c, Counts::default())).collect();
    let mut total = Counts::default();

    for l in &layers {
        let counted = Counts {
            flops: if conv.counts_flops(l.category) { l.flops } else { 0 },
            params: if conv.counts_params(l.category) { l.params } else { 0 },
        };
        total += counted;
        *per_category.entry(l.category).or_default() += counted;
        match per_stage.last_mut() {
            Some(s) if s.scope == l.scope => {
                s.flops += counted.flops;
                s.params += counted.params;
            }
            _ => per_stage.push(ScopeCounts {
                scope: l.scope.clone(),
                flops: counted.flops,
                params: counted.params,
            }),
        }
    }

    Ok(ComplexityReport {
        flops_madds: total.flops,
        params: total.params,
        per_stage,
        per_category,
    })
}

impl ComplexityReport {
    pub fn gflops(&self) -> f64 {
        self.flops_madds as f64 / 1e9
    }

    pub fn mparams(&self) -> f64 {
        self.params as f64 / 1e6
    }

    pub fn category(&self, c: Category) -> Counts {
        self.per_category.get(&c).copied().unwrap_or_default()
    }

    pub fn stage(&self, scope: &str) -> Option<&ScopeCounts> {
        self.per_stage.iter().find(|s| s.scope == scope)
    }

    /// CSV rows `scope,category,flops,params`: one per scope, one per
    /// category (scope `total`) and the grand total (`total,all`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scope", "category", "flops", "params"])?;
        for s in &self.per_stage {
            w.write_record([s.scope.as_str(), "all", &s.flops.to_string(), &s.params.to_string()])?;
        }
        for (c, n) in &self.per_category {
            w.write_record(["total", c.name(), &n.flops.to_string(), &n.params.to_string()])?;
        }
        w.write_record(["total", "all", &self.flops_madds.to_string(), &self.params.to_string()])?;
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Plain-text table for terminal output.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<10} {:>16} {:>14}\n", "scope", "multiply-adds", "params"));
        for st in &self.per_stage {
            s.push_str(&format!("{:<10} {:>16} {:>14}\n", st.scope, st.flops, st.params));
        }
        s.push_str(&format!("{:-<42}\n", ""));
        for (c, n) in &self.per_category {
            s.push_str(&format!("{:<10} {:>16} {:>14}\n", c.name(), n.flops, n.params));
        }
        s.push_str(&format!("{:-<42}\n", ""));
        s.push_str(&format!(
            "{:<10} {:>16} {:>14}\n{:<10} {:>15.4}G {:>13.4}M\n",
            "total",
            self.flops_madds,
            self.params,
            "",
            self.gflops(),
            self.mparams()
        ));
        s
    }
}
