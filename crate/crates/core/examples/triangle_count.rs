//! Compile the guarded edge-clause formula of the triangle and count
//! its models (the README walkthrough, as a library call).

use decdnnf_core::compiler::{compile, CompileConfig};
use decdnnf_core::instances::{build_f_g, cycle};
use decdnnf_core::semantics::model_count;
use decdnnf_core::structure::VariableOrder;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = cycle(3)?;
    let f = build_f_g(&g)?;
    let cfg = CompileConfig::fixed(VariableOrder::sorted(&f.scope));
    let z = compile(&f, &cfg);
    assert!(z.validate_read_once().ok() && z.validate_decomposable().ok());
    let count = model_count(&z, &f.scope)?.count;
    println!("triangle models: {count}");
    assert_eq!(count, 3u32.into());
    Ok(())
}
