//! String comparison helpers. Stored orthographies are never rewritten;
//! these functions only build comparison keys.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// NFC, the normalization form used for every orthography comparison.
pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// Loose key for matching value spellings across transliterations:
/// decomposed, combining marks and ayn/hamza signs dropped, lowercased,
/// whitespace collapsed. Arabic short vowels are combining marks, so
/// `مُجَرَّد` and `مجرد` fold together.
pub fn fold(s: &str) -> String {
    let stripped: String = s
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .filter(|c| !matches!(c, 'ʿ' | 'ʾ' | '\'' | '’' | '‘' | '`' | 'ـ'))
        .flat_map(char::to_lowercase)
        .collect();
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes Arabic short vowels, tanwin, sukun, dagger alif and tatweel.
/// Shadda is kept: it distinguishes schemes such as فعّل from فعل.
pub fn strip_vowels(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, '\u{064B}'..='\u{0650}' | '\u{0652}' | '\u{0670}' | '\u{0640}'))
        .collect()
}

/// Comparison key for verbal schemes: unvocalized, alif variants unified,
/// spaces removed.
pub fn scheme_key(s: &str) -> String {
    nfc(&strip_vowels(&nfc(s)))
        .chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'أ' | 'إ' | 'آ' | 'ٱ' => 'ا',
            other => other,
        })
        .collect()
}
