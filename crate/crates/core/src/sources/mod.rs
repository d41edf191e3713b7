//! Arithmetic inputs: Dirichlet characters, the built-in tau series and
//! external Hecke eigenvalue tables.

pub mod character;
pub mod eigen;
pub mod tau;

pub use character::{all_characters, unit_group_structure, DirichletCharacter, UnitComponent};
pub use eigen::{gl2_local_roots, load_eigenvalues, EigenvalueSource, SourceKind};
pub use tau::{satisfies_deligne, tau_qexpansion, TauSeries};
