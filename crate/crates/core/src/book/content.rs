use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One content document: a title and a lightweight-markup body.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentDoc {
    pub title: String,
    pub body: String,
}

impl ContentDoc {
    /// Takes the title from a leading `# ` heading, falling back to `token`.
    pub fn from_markdown(token: &str, text: &str) -> Self {
        let text = text.trim_start_matches('\u{feff}');
        let trimmed = text.trim_start();
        if let Some(rest) = trimmed.strip_prefix("# ") {
            let (title, body) = rest.split_once('\n').unwrap_or((rest, ""));
            ContentDoc {
                title: title.trim().to_owned(),
                body: body.trim().to_owned(),
            }
        } else {
            ContentDoc {
                title: token.to_owned(),
                body: text.trim().to_owned(),
            }
        }
    }
}

/// Content tokens resolved to documents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentStore {
    docs: BTreeMap<String, ContentDoc>,
}

impl ContentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, token: impl Into<String>, doc: ContentDoc) {
        self.docs.insert(token.into(), doc);
    }

    pub fn get(&self, token: &str) -> Option<&ContentDoc> {
        self.docs.get(token)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.docs.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.docs.keys().map(String::as_str)
    }
}
