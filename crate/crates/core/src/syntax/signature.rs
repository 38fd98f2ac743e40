use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::expr::Name;
use crate::error::SignatureError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Constructor,
    Function,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SymbolInfo {
    pub kind: SymbolKind,
    pub arity: usize,
}

/// Constructor and function symbols with their arities. The two name sets
/// are disjoint; `⊥` is implicit and never stored here.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Signature {
    symbols: BTreeMap<Name, SymbolInfo>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(
        &mut self,
        name: &str,
        kind: SymbolKind,
        arity: usize,
    ) -> Result<(), SignatureError> {
        if !is_symbol_name(name) {
            return Err(SignatureError::BadName(name.to_string()));
        }
        let info = SymbolInfo { kind, arity };
        match self.symbols.get(name) {
            Some(old) if *old == info => Ok(()),
            Some(old) => Err(SignatureError::Clash {
                name: name.to_string(),
                old: *old,
                new: info,
            }),
            None => {
                self.symbols.insert(Name::from(name), info);
                Ok(())
            }
        }
    }

    pub fn with_constructor(mut self, name: &str, arity: usize) -> Result<Self, SignatureError> {
        self.declare(name, SymbolKind::Constructor, arity)?;
        Ok(self)
    }

    pub fn with_function(mut self, name: &str, arity: usize) -> Result<Self, SignatureError> {
        self.declare(name, SymbolKind::Function, arity)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<SymbolInfo> {
        self.symbols.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.get(name).map(|i| i.arity)
    }

    pub fn is_constructor(&self, name: &str) -> bool {
        matches!(
            self.get(name),
            Some(SymbolInfo {
                kind: SymbolKind::Constructor,
                ..
            })
        )
    }

    pub fn is_function(&self, name: &str) -> bool {
        matches!(
            self.get(name),
            Some(SymbolInfo {
                kind: SymbolKind::Function,
                ..
            })
        )
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, SymbolInfo)> {
        self.symbols.iter().map(|(k, v)| (k, *v))
    }

    pub fn constructors(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.iter()
            .filter(|(_, i)| i.kind == SymbolKind::Constructor)
            .map(|(n, i)| (n, i.arity))
    }

    pub fn functions(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.iter()
            .filter(|(_, i)| i.kind == SymbolKind::Function)
            .map(|(n, i)| (n, i.arity))
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.symbols.keys()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Union of two signatures; fails if a name is declared differently.
    pub fn merge(&self, other: &Signature) -> Result<Signature, SignatureError> {
        let mut out = self.clone();
        for (name, info) in other.iter() {
            out.declare(name, info.kind, info.arity)?;
        }
        Ok(out)
    }
}

/// Symbol names start with a lowercase letter, a digit or `#`.
pub(crate) fn is_symbol_name(name: &str) -> bool {
    match name.chars().next() {
        Some(c) => c.is_ascii_lowercase() || c.is_ascii_digit() || c == '#',
        None => false,
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Signature { ")?;
        for (i, (n, info)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let k = match info.kind {
                SymbolKind::Constructor => "c",
                SymbolKind::Function => "f",
            };
            write!(f, "{k}:{n}/{}", info.arity)?;
        }
        f.write_str(" }")
    }
}
