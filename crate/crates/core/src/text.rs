use alloc::string::String;
use alloc::vec::Vec;

/// Lowercases `text` and splits it on every maximal run of non-alphanumeric
/// characters, dropping empty pieces.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn splits_and_lowercases() {
        assert_eq!(tokenize("It's GREAT!"), vec!["it", "s", "great"]);
        assert_eq!(tokenize("a-b  c"), vec!["a", "b", "c"]);
        assert!(tokenize("").is_empty());
        assert!(tokenize(" ,,; ").is_empty());
    }

    #[test]
    fn keeps_digits_and_unicode_letters() {
        assert_eq!(tokenize("Top10 Café"), vec!["top10", "café"]);
    }
}
