//! Porter stemming algorithm (the original 1980 rule set).
//!
//! Operates on lowercase ASCII; words of length <= 2 and words containing
//! non-ASCII bytes are returned unchanged.

fn is_consonant(word: &[u8], i: usize) -> bool {
    match word[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(word, i - 1),
        _ => true,
    }
}

/// The measure m: number of VC sequences in `word`.
fn measure(word: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..word.len() {
        let cons = is_consonant(word, i);
        if cons && prev_vowel {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn contains_vowel(word: &[u8]) -> bool {
    (0..word.len()).any(|i| !is_consonant(word, i))
}

fn ends_double_consonant(word: &[u8]) -> bool {
    let n = word.len();
    n >= 2 && word[n - 1] == word[n - 2] && is_consonant(word, n - 1)
}

/// *o: stem ends cvc where the final consonant is not w, x, or y.
fn ends_cvc(word: &[u8]) -> bool {
    let n = word.len();
    n >= 3
        && is_consonant(word, n - 3)
        && !is_consonant(word, n - 2)
        && is_consonant(word, n - 1)
        && !matches!(word[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(word: &[u8], suffix: &[u8]) -> bool {
    word.len() >= suffix.len() && &word[word.len() - suffix.len()..] == suffix
}

/// Replaces `suffix` with `replacement` when the remaining stem has measure
/// greater than `min_m`. Returns true when the suffix matched (whether or not
/// the measure condition allowed the rewrite), which ends the step.
fn replace_if_measure(
    word: &mut Vec<u8>,
    suffix: &[u8],
    replacement: &[u8],
    min_m: usize,
) -> bool {
    if !ends_with(word, suffix) {
        return false;
    }
    let stem_len = word.len() - suffix.len();
    if measure(&word[..stem_len]) > min_m {
        word.truncate(stem_len);
        word.extend_from_slice(replacement);
    }
    true
}

fn step_1a(word: &mut Vec<u8>) {
    if ends_with(word, b"sses") {
        word.truncate(word.len() - 2);
    } else if ends_with(word, b"ies") {
        word.truncate(word.len() - 2);
    } else if ends_with(word, b"ss") {
        // unchanged
    } else if ends_with(word, b"s") {
        word.truncate(word.len() - 1);
    }
}

fn step_1b(word: &mut Vec<u8>) {
    if ends_with(word, b"eed") {
        if measure(&word[..word.len() - 3]) > 0 {
            word.truncate(word.len() - 1);
        }
        return;
    }
    let removed = if ends_with(word, b"ed") && contains_vowel(&word[..word.len() - 2]) {
        word.truncate(word.len() - 2);
        true
    } else if ends_with(word, b"ing") && contains_vowel(&word[..word.len() - 3]) {
        word.truncate(word.len() - 3);
        true
    } else {
        false
    };
    if !removed {
        return;
    }
    if ends_with(word, b"at") || ends_with(word, b"bl") || ends_with(word, b"iz") {
        word.push(b'e');
    } else if ends_double_consonant(word) && !matches!(word[word.len() - 1], b'l' | b's' | b'z') {
        word.truncate(word.len() - 1);
    } else if measure(word) == 1 && ends_cvc(word) {
        word.push(b'e');
    }
}

fn step_1c(word: &mut Vec<u8>) {
    if ends_with(word, b"y") && contains_vowel(&word[..word.len() - 1]) {
        let n = word.len();
        word[n - 1] = b'i';
    }
}

const STEP2_RULES: &[(&[u8], &[u8])] = &[
    (b"ational", b"ate"),
    (b"tional", b"tion"),
    (b"enci", b"ence"),
    (b"anci", b"ance"),
    (b"izer", b"ize"),
    (b"abli", b"able"),
    (b"alli", b"al"),
    (b"entli", b"ent"),
    (b"eli", b"e"),
    (b"ousli", b"ous"),
    (b"ization", b"ize"),
    (b"ation", b"ate"),
    (b"ator", b"ate"),
    (b"alism", b"al"),
    (b"iveness", b"ive"),
    (b"fulness", b"ful"),
    (b"ousness", b"ous"),
    (b"aliti", b"al"),
    (b"iviti", b"ive"),
    (b"biliti", b"ble"),
];

const STEP3_RULES: &[(&[u8], &[u8])] = &[
    (b"icate", b"ic"),
    (b"ative", b""),
    (b"alize", b"al"),
    (b"iciti", b"ic"),
    (b"ical", b"ic"),
    (b"ful", b""),
    (b"ness", b""),
];

const STEP4_SUFFIXES: &[&[u8]] = &[
    b"al", b"ance", b"ence", b"er", b"ic", b"able", b"ible", b"ant", b"ement", b"ment", b"ent",
    b"ion", b"ou", b"ism", b"ate", b"iti", b"ous", b"ive", b"ize",
];

fn step_4(word: &mut Vec<u8>) {
    for &suffix in STEP4_SUFFIXES {
        if !ends_with(word, suffix) {
            continue;
        }
        let stem_len = word.len() - suffix.len();
        if suffix == b"ion" && !(stem_len > 0 && matches!(word[stem_len - 1], b's' | b't')) {
            return;
        }
        if measure(&word[..stem_len]) > 1 {
            word.truncate(stem_len);
        }
        return;
    }
}

fn step_5a(word: &mut Vec<u8>) {
    if !ends_with(word, b"e") {
        return;
    }
    let stem = &word[..word.len() - 1];
    let m = measure(stem);
    if m > 1 || (m == 1 && !ends_cvc(stem)) {
        word.truncate(word.len() - 1);
    }
}

fn step_5b(word: &mut Vec<u8>) {
    if measure(word) > 1 && ends_double_consonant(word) && word[word.len() - 1] == b'l' {
        word.truncate(word.len() - 1);
    }
}

pub fn stem(word: &str) -> String {
    if word.len() <= 2 || !word.bytes().all(|b| b.is_ascii()) {
        return word.to_string();
    }
    let mut w = word.as_bytes().to_vec();
    step_1a(&mut w);
    step_1b(&mut w);
    step_1c(&mut w);
    for &(suffix, replacement) in STEP2_RULES {
        if replace_if_measure(&mut w, suffix, replacement, 0) {
            break;
        }
    }
    for &(suffix, replacement) in STEP3_RULES {
        if replace_if_measure(&mut w, suffix, replacement, 0) {
            break;
        }
    }
    step_4(&mut w);
    step_5a(&mut w);
    step_5b(&mut w);
    String::from_utf8(w).expect("ascii in, ascii out")
}
