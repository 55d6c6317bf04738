//! Prompt templates with `{name}` placeholders.
//!
//! The defaults are compiled in from `templates/`; a directory holding
//! files of the same names overrides them one by one.

use std::fs;
use std::path::Path;

use crate::error::Result;

/// Replaces each `{name}` whose name appears in `values`. Other braces are
/// left untouched, and substituted values are never rescanned.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let replaced = after.find('}').and_then(|close| {
            let name = &after[..close];
            values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (v, close))
        });
        match replaced {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

macro_rules! templates {
    ($($field:ident => $file:literal),* $(,)?) => {
        #[derive(Debug, Clone, PartialEq, Eq)]
        pub struct PromptTemplates {
            $(pub $field: String,)*
        }

        impl Default for PromptTemplates {
            fn default() -> Self {
                PromptTemplates {
                    $($field: include_str!(concat!("../templates/", $file)).to_owned(),)*
                }
            }
        }

        impl PromptTemplates {
            pub const FILE_NAMES: &'static [&'static str] = &[$($file,)*];

            /// Defaults, with any same-named file in `dir` taking precedence.
            pub fn with_overrides(dir: &Path) -> Result<Self> {
                let mut t = Self::default();
                $(
                    let path = dir.join($file);
                    if path.exists() {
                        t.$field = fs::read_to_string(&path)?;
                    }
                )*
                Ok(t)
            }
        }
    };
}

templates! {
    llm_baseline => "llm_baseline.txt",
    paraphrase_location => "paraphrase_location.txt",
    paraphrase_date => "paraphrase_date.txt",
    rephrase_fixed_phrase => "rephrase_fixed_phrase.txt",
    rephrase_free => "rephrase_free.txt",
    replace_word => "replace_word.txt",
    synthetic_event_names => "synthetic_event_names.txt",
    synthetic_narrator_roles => "synthetic_narrator_roles.txt",
    synthetic_generation_system => "synthetic_generation_system.txt",
    synthetic_generation_user => "synthetic_generation_user.txt",
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_known_placeholders_only() {
        let t = "{\n\t\"a\": [] {x} {y}\n}";
        assert_eq!(render(t, &[("x", "{y}")]), "{\n\t\"a\": [] {y} {y}\n}");
        assert_eq!(render("{unterminated", &[("x", "1")]), "{unterminated");
        assert_eq!(render("", &[]), "");
    }

    #[test]
    fn default_templates_match_figures() {
        let t = PromptTemplates::default();
        assert!(t.llm_baseline.ends_with("Phrase:\n{pre_context}```{event}```{post_context}"));
        assert!(t.llm_baseline.contains("\t\t\"time periods\": []"));
        let names = render(
            &t.synthetic_event_names,
            &[("count", "10"), ("event_type", "tech conferences")],
        );
        assert!(names.starts_with("Generate a list of 10 different fictional tech conferences names."));
        assert!(t.rephrase_fixed_phrase.contains("fixed:`{phrase}`"));
        assert!(t.synthetic_generation_user.contains("<ntmp></ntmp> markup tags."));
    }

    #[test]
    fn overrides_from_directory() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("paraphrase_date.txt"), "date like {date}?").unwrap();
        let t = PromptTemplates::with_overrides(dir.path()).unwrap();
        assert_eq!(t.paraphrase_date, "date like {date}?");
        assert_eq!(t.llm_baseline, PromptTemplates::default().llm_baseline);
    }
}
