//! Pre-baked experiment specs.

use super::ExperimentSpec;
use crate::error::{Error, Result};

pub const RECIPES: [&str; 4] = ["d3-hstar", "decay-scan", "slab-probe", "renorm-trace"];

pub fn recipe(name: &str) -> Result<Vec<ExperimentSpec>> {
    let spec = match name {
        "d3-hstar" => ExperimentSpec::new("d3-hstar", "hstar", 7)
            .with("dim", 3)
            .with("L", "16,32,64")
            .with("n", "200,200,100")
            .with("h-grid", "0.5:2.5:0.05")
            .with("margin", "0.25L")
            .with("model", "gff")
            .with("plot", "true"),
        "decay-scan" => ExperimentSpec::new("decay-scan", "decay", 11)
            .with("dim", 3)
            .with("L", "8,16,32")
            .with("h", "1.5,2.0,2.5,3.0")
            .with("n", 2000)
            .with("margin", "0.25L")
            .with("plot", "true"),
        "slab-probe" => ExperimentSpec::new("slab-probe", "slab-cert", 5)
            .with("h0", 0.25)
            .with("L0", 2)
            .with("pcsite", "estimate")
            .with("pc-L", "8,16,32")
            .with("pc-n", 400)
            .with("empirical-n", 2000),
        "renorm-trace" => ExperimentSpec::new("renorm-trace", "renorm", 3)
            .with("dim", 3)
            .with("L0", 10)
            .with("l0", 100)
            .with("h0", 16)
            .with("nmax", 40)
            .with("p0", "analytic"),
        other => {
            return Err(Error::Config(format!("unknown recipe {other:?}; known: {}", RECIPES.join(", "))));
        }
    };
    Ok(vec![spec])
}
