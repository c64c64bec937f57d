/// Default text analyzer: lowercase, split on any non-alphanumeric character.
/// No stemming and no stopword removal.
pub fn analyze(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}
