//! Runs the guide's code snippets as doc-tests: `cargo test -p volquad-book-tests`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/surfaces.md")]
pub mod surfaces {}

#[doc = include_str!("../../../book/src/nodes-and-meshes.md")]
pub mod nodes_and_meshes {}

#[doc = include_str!("../../../book/src/local-weights.md")]
pub mod local_weights {}

#[doc = include_str!("../../../book/src/rules.md")]
pub mod rules {}

#[doc = include_str!("../../../book/src/slivers.md")]
pub mod slivers {}

#[doc = include_str!("../../../book/src/studies.md")]
pub mod studies {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
