//! Function families, hierarchical mixtures, prompt sampling and prompt-set files.

mod curriculum;
mod family;
mod features;
mod input;
mod io;
mod mixture;
mod prompt;

pub use curriculum::{CurriculumAttr, CurriculumSchedule, CurriculumValues};
pub use family::{FamilyKind, FunctionFamilySpec, FunctionInstance};
pub use features::{monomial_pairs, FeatureMap};
pub use input::InputDistribution;
pub use io::{generate_prompt_set, PromptSet, PromptSetConfig, PromptSetHeader, FORMAT_VERSION};
pub use mixture::{noisy_discrete, sample_prompt, MixtureSpec};
pub use prompt::Prompt;
