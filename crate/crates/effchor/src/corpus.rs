//! Example files shipped inside the binary, so the command line works
//! without a checkout.

pub struct Example {
    pub name: &'static str,
    pub source: &'static str,
}

impl Example {
    /// The first comment line of the file.
    pub fn summary(&self) -> &'static str {
        self.source.lines().find_map(|l| l.strip_prefix('#')).map_or("", str::trim)
    }
}

pub const EXAMPLES: &[Example] = &[
    Example { name: "pipeline.chor", source: include_str!("../corpus/pipeline.chor") },
    Example { name: "ring.chor", source: include_str!("../corpus/ring.chor") },
    Example { name: "selfcomm.chor", source: include_str!("../corpus/selfcomm.chor") },
    Example { name: "wide.chor", source: include_str!("../corpus/wide.chor") },
    Example { name: "deadlock.net", source: include_str!("../corpus/deadlock.net") },
    Example { name: "hosts.txt", source: include_str!("../corpus/hosts.txt") },
];

/// Looks an example up by file name, with or without its extension.
pub fn find(name: &str) -> Option<&'static Example> {
    EXAMPLES
        .iter()
        .find(|e| e.name == name || e.name.rsplit_once('.').is_some_and(|(stem, _)| stem == name))
}

/// The choreography examples, in the order above.
pub fn choreographies() -> impl Iterator<Item = &'static Example> {
    EXAMPLES.iter().filter(|e| e.name.ends_with(".chor"))
}
