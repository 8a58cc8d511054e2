//! Library surface of the CLI: the document schema and the bundled example
//! documents, shared with the integration and acceptance tests.

pub mod document;

/// Bundled documents, addressable by name from any command.
pub fn bundled_document(name: &str) -> Option<&'static str> {
    match name {
        "example1" => Some(include_str!("../documents/example1.json")),
        "example2" => Some(include_str!("../documents/example2.json")),
        "example3" => Some(include_str!("../documents/example3.json")),
        _ => None,
    }
}
