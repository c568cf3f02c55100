use alloc::string::String;
use alloc::sync::Arc;
use core::fmt;

/// A location (node) in the distributed system.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc(Arc<str>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("location names must be nonempty")]
pub struct EmptyLocation;

impl Loc {
    pub fn try_new(name: impl AsRef<str>) -> Result<Loc, EmptyLocation> {
        let name = name.as_ref();
        if name.is_empty() {
            return Err(EmptyLocation);
        }
        Ok(Loc(Arc::from(name)))
    }

    /// # Panics
    ///
    /// Panics if `name` is empty.
    pub fn new(name: impl AsRef<str>) -> Loc {
        Loc::try_new(name).expect("empty location name")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Loc {
    fn from(s: &str) -> Self {
        Loc::new(s)
    }
}

impl From<String> for Loc {
    fn from(s: String) -> Self {
        Loc::new(s)
    }
}

impl fmt::Debug for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Loc {
    fn as_ref(&self) -> &str {
        &self.0
    }
}
