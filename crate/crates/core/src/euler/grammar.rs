//! Product-spec strings:
//!
//! ```text
//! zeta
//! dirichlet:q=<Q>,index=<e1.e2...>
//! gl2:source=delta[,chi=q=<Q>,index=<e1.e2...>]
//! gl2:source=file:<path>[,chi=q=<Q>,index=<e1.e2...>]
//! ```
//!
//! Parsing only checks the grammar and reduces character indices; building
//! the [`EulerProductSpec`] loads eigenvalue data.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use super::EulerProductSpec;
use crate::error::{Error, Result};
use crate::sources::eigen::{load_eigenvalues, DEFAULT_DELTA_TERMS};
use crate::sources::{unit_group_structure, DirichletCharacter, EigenvalueSource};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gl2Source {
    Delta,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterLabel {
    pub q: u64,
    pub index: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProductDescriptor {
    Zeta,
    Dirichlet(CharacterLabel),
    Gl2 {
        source: Gl2Source,
        chi: Option<CharacterLabel>,
    },
}

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub allow_ramanujan_violations: bool,
    /// Tau coefficients computed for `gl2:source=delta`.
    pub delta_terms: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            allow_ramanujan_violations: false,
            delta_terms: DEFAULT_DELTA_TERMS,
        }
    }
}

impl ProductDescriptor {
    pub fn build(&self, opts: &BuildOptions) -> Result<EulerProductSpec> {
        match self {
            ProductDescriptor::Zeta => Ok(EulerProductSpec::zeta()),
            ProductDescriptor::Dirichlet(c) => Ok(EulerProductSpec::dirichlet(c.character()?)),
            ProductDescriptor::Gl2 { source, chi } => {
                let chi = match chi {
                    Some(c) => c.character()?,
                    None => DirichletCharacter::principal(1),
                };
                let source = match source {
                    Gl2Source::Delta => EigenvalueSource::delta(opts.delta_terms)?,
                    Gl2Source::File(path) => load_eigenvalues(path, opts.allow_ramanujan_violations)?,
                };
                EulerProductSpec::gl2_twisted(Arc::new(source), chi)
            }
        }
    }
}

impl CharacterLabel {
    pub fn character(&self) -> Result<DirichletCharacter> {
        DirichletCharacter::new(self.q, &self.index)
    }

    fn parse(full: &str, s: &str) -> Result<Self> {
        let bad = |reason: String| Error::parse("product spec", full, reason);
        let mut q = None;
        let mut index = None;
        for part in s.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value in `{part}`")))?;
            match key {
                "q" => {
                    let v: u64 = value
                        .parse()
                        .map_err(|_| bad(format!("modulus `{value}` is not a positive integer")))?;
                    if v == 0 {
                        return Err(bad("modulus must be positive".into()));
                    }
                    q = Some(v);
                }
                "index" => {
                    let tuple = if value.is_empty() {
                        Vec::new()
                    } else {
                        value
                            .split('.')
                            .map(|e| e.parse::<u64>())
                            .collect::<std::result::Result<Vec<_>, _>>()
                            .map_err(|_| bad(format!("index `{value}` is not a dot-separated tuple")))?
                    };
                    index = Some(tuple);
                }
                other => return Err(bad(format!("unknown character key `{other}`"))),
            }
        }
        let q = q.ok_or_else(|| bad("character is missing q=<Q>".into()))?;
        let comps = unit_group_structure(q);
        let index = index.unwrap_or_else(|| vec![0; comps.len()]);
        if index.len() != comps.len() {
            return Err(bad(format!(
                "modulus {q} has {} unit-group component(s) but index has {} entr{}",
                comps.len(),
                index.len(),
                if index.len() == 1 { "y" } else { "ies" }
            )));
        }
        let index = index.iter().zip(&comps).map(|(e, c)| e % c.order).collect();
        Ok(Self { q, index })
    }
}

impl fmt::Display for CharacterLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.index.iter().map(u64::to_string).collect();
        write!(f, "q={},index={}", self.q, idx.join("."))
    }
}

impl FromStr for ProductDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::parse("product spec", s, reason);
        let trimmed = s.trim();
        if trimmed == "zeta" {
            return Ok(ProductDescriptor::Zeta);
        }
        let (head, rest) = trimmed
            .split_once(':')
            .ok_or_else(|| bad("expected `zeta`, `dirichlet:...` or `gl2:...`"))?;
        match head {
            "dirichlet" => Ok(ProductDescriptor::Dirichlet(CharacterLabel::parse(s, rest)?)),
            "gl2" => {
                let body = rest
                    .strip_prefix("source=")
                    .ok_or_else(|| bad("gl2 spec must start with `source=`"))?;
                let (src, chi) = match body.find(",chi=") {
                    Some(i) => (&body[..i], Some(&body[i + ",chi=".len()..])),
                    None => (body, None),
                };
                let source = if src == "delta" {
                    Gl2Source::Delta
                } else if let Some(path) = src.strip_prefix("file:") {
                    if path.is_empty() {
                        return Err(bad("empty eigenvalue file path"));
                    }
                    Gl2Source::File(PathBuf::from(path))
                } else {
                    return Err(bad("source must be `delta` or `file:<path>`"));
                };
                let chi = chi.map(|c| CharacterLabel::parse(s, c)).transpose()?;
                // A trivial twist is the same as no twist.
                let chi = chi.filter(|c| c.q != 1);
                Ok(ProductDescriptor::Gl2 { source, chi })
            }
            _ => Err(bad("expected `zeta`, `dirichlet:...` or `gl2:...`")),
        }
    }
}

impl fmt::Display for ProductDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProductDescriptor::Zeta => f.write_str("zeta"),
            ProductDescriptor::Dirichlet(c) => write!(f, "dirichlet:{c}"),
            ProductDescriptor::Gl2 { source, chi } => {
                match source {
                    Gl2Source::Delta => f.write_str("gl2:source=delta")?,
                    Gl2Source::File(p) => write!(f, "gl2:source=file:{}", p.display())?,
                }
                if let Some(c) = chi {
                    write!(f, ",chi={c}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon(s: &str) -> String {
        s.parse::<ProductDescriptor>().unwrap().to_string()
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canon("zeta"), "zeta");
        assert_eq!(canon("dirichlet:q=4,index=1"), "dirichlet:q=4,index=1");
        assert_eq!(canon("dirichlet:q=4,index=3"), "dirichlet:q=4,index=1");
        assert_eq!(canon("dirichlet:index=1,q=4"), "dirichlet:q=4,index=1");
        assert_eq!(canon("dirichlet:q=4"), "dirichlet:q=4,index=0");
        assert_eq!(canon("dirichlet:q=1,index="), "dirichlet:q=1,index=");
        assert_eq!(canon("gl2:source=delta"), "gl2:source=delta");
        assert_eq!(
            canon("gl2:source=delta,chi=q=5,index=1"),
            "gl2:source=delta,chi=q=5,index=1"
        );
        assert_eq!(canon("gl2:source=delta,chi=q=1,index="), "gl2:source=delta");
        assert_eq!(
            canon("gl2:source=file:/tmp/a b/maass.txt,chi=q=8,index=1.2"),
            "gl2:source=file:/tmp/a b/maass.txt,chi=q=8,index=1.0"
        );
    }

    #[test]
    fn rejects_malformed() {
        for s in [
            "",
            "zeta:",
            "riemann",
            "dirichlet:",
            "dirichlet:q=0,index=",
            "dirichlet:q=5,index=1.2",
            "dirichlet:q=5,index=x",
            "dirichlet:q=5,foo=1",
            "gl2:source=",
            "gl2:delta",
            "gl2:source=file:",
            "gl2:source=delta,chi=q=5,index=",
        ] {
            assert!(s.parse::<ProductDescriptor>().is_err(), "accepted `{s}`");
        }
    }

    proptest::proptest! {
        #[test]
        fn canonical_string_round_trips(q in 1u64..200, raw in proptest::collection::vec(0u64..1000, 0..4), delta in proptest::bool::ANY) {
            let comps = unit_group_structure(q);
            let mut index = raw.clone();
            index.resize(comps.len(), 7);
            let label = CharacterLabel::parse("", &format!("q={q},index={}",
                index.iter().map(u64::to_string).collect::<Vec<_>>().join("."))).unwrap();
            let desc = if delta {
                ProductDescriptor::Gl2 { source: Gl2Source::Delta, chi: Some(label).filter(|c| c.q != 1) }
            } else {
                ProductDescriptor::Dirichlet(label)
            };
            let text = desc.to_string();
            let again: ProductDescriptor = text.parse().unwrap();
            proptest::prop_assert_eq!(&again, &desc);
            proptest::prop_assert_eq!(again.to_string(), text);
        }
    }
}
