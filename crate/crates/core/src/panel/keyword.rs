use serde::{Deserialize, Serialize};

/// A tracked symptom together with the expressions that count as a search for it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyword {
    pub canonical_name: String,
    pub synonyms: Vec<String>,
}

const DEFAULT_KEYWORDS: [(&str, &[&str]); 25] = [
    ("altered consciousness", &["altered consciousness"]),
    ("anorexia", &["appetite loss", "loss of appetite", "lost appetite"]),
    ("anosmia", &["loss of smell", "can't smell"]),
    (
        "arthralgia",
        &["joint ache", "joint aching", "joints ache", "joints aching"],
    ),
    ("chest pain", &["chest pain"]),
    ("chills", &["chills"]),
    ("cough", &["cough"]),
    ("diarrhea", &["diarrhea", "diarrhoea"]),
    ("dry cough", &["dry cough"]),
    (
        "dyspnea",
        &["breathing difficult", "short breath", "shortness of breath"],
    ),
    ("epistaxis", &["nose bleed", "nose bleeding"]),
    ("fatigue", &["fatigue"]),
    ("head ache", &["head ache", "headache"]),
    ("myalgia", &["muscle ache", "muscular pain"]),
    ("nasal congestion", &["blocked nose", "nasal congestion"]),
    ("nausea", &["nausea", "nauseous"]),
    ("pyrexia", &["fever", "high temperature"]),
    (
        "pneumonia",
        &["pneumonia", "respiratory infection", "respiratory symptoms"],
    ),
    ("rash", &["rash"]),
    ("rhinorrhea", &["runny nose"]),
    ("seizure", &["seizure"]),
    ("sore throat", &["sore throat", "throat pain"]),
    ("sternutation", &["sneeze", "sneezing"]),
    ("tiredness", &["tiredness"]),
    ("vomiting", &["vomit", "vomiting"]),
];

/// Ordered set of keywords. The order fixes the layout of every per-keyword vector
/// in the crate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRegistry {
    keywords: Vec<Keyword>,
}

impl Default for KeywordRegistry {
    /// The 25 COVID-19 symptoms tracked by default.
    fn default() -> Self {
        let keywords = DEFAULT_KEYWORDS
            .iter()
            .map(|(name, syn)| Keyword {
                canonical_name: (*name).to_string(),
                synonyms: syn.iter().map(|s| (*s).to_string()).collect(),
            })
            .collect();
        Self { keywords }
    }
}

impl KeywordRegistry {
    /// Builds a registry from an explicit keyword list. Returns `None` if two
    /// keywords share a canonical name.
    pub fn new(keywords: Vec<Keyword>) -> Option<Self> {
        for (i, k) in keywords.iter().enumerate() {
            if keywords[..i].iter().any(|o| o.canonical_name == k.canonical_name) {
                return None;
            }
        }
        Some(Self { keywords })
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn keywords(&self) -> &[Keyword] {
        &self.keywords
    }

    pub fn name(&self, index: usize) -> &str {
        &self.keywords[index].canonical_name
    }

    pub fn names(&self) -> Vec<String> {
        self.keywords.iter().map(|k| k.canonical_name.clone()).collect()
    }

    /// Resolves a canonical name or a synonym (case-insensitive) to its index.
    /// Canonical names take precedence over synonyms.
    pub fn resolve(&self, name: &str) -> Option<usize> {
        let needle = name.trim().to_lowercase();
        self.keywords
            .iter()
            .position(|k| k.canonical_name == needle)
            .or_else(|| self.keywords.iter().position(|k| k.synonyms.contains(&needle)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_has_25_unique_rows() {
        let reg = KeywordRegistry::default();
        assert_eq!(reg.len(), 25);
        assert!(KeywordRegistry::new(reg.keywords().to_vec()).is_some());
    }

    #[test]
    fn resolves_synonyms() {
        let reg = KeywordRegistry::default();
        let pyrexia = reg.resolve("pyrexia").unwrap();
        assert_eq!(reg.resolve("Fever"), Some(pyrexia));
        assert_eq!(reg.resolve("headache"), reg.resolve("head ache"));
        assert_ne!(reg.resolve("cough"), reg.resolve("dry cough"));
        assert_eq!(reg.resolve("hiccups"), None);
    }

    #[test]
    fn rejects_duplicate_canonical_names() {
        let k = Keyword {
            canonical_name: "cough".into(),
            synonyms: vec![],
        };
        assert!(KeywordRegistry::new(vec![k.clone(), k]).is_none());
    }
}
