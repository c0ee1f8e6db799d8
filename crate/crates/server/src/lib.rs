//! HTTP service for comparing student diagrams against stored references.
//!
//! [`api::router`] builds the axum application; the `duet` binary wraps it
//! together with command-line access to the same pipeline.

pub mod api;

pub use api::{router, ApiError, AppState, BatchItem, BatchResponse, CorsConfig, SubmissionResponse};

use std::path::Path;

use duet_core::feedback::{Lexicon, TemplateSet};

/// Feedback templates from `<dir>/feedback` and the neutrality lexicon from
/// `<dir>/lexicon.txt`, each falling back to the built-in set when absent.
pub fn load_templates(dir: Option<&Path>) -> Result<(TemplateSet, Lexicon), String> {
    let Some(dir) = dir else {
        return Ok((TemplateSet::default(), Lexicon::default()));
    };
    let feedback = dir.join("feedback");
    let templates = if feedback.is_dir() {
        TemplateSet::load_dir(&feedback).map_err(|e| e.to_string())?
    } else {
        TemplateSet::default()
    };
    let lexicon_path = dir.join("lexicon.txt");
    let lexicon = if lexicon_path.is_file() {
        Lexicon::load(&lexicon_path).map_err(|e| format!("{}: {e}", lexicon_path.display()))?
    } else {
        Lexicon::default()
    };
    Ok((templates, lexicon))
}
